#pragma once

#include <string>
#include <vector>

#include "epirisk/kmc.hpp"
#include "epirisk/observations.hpp"
#include "epirisk/riskmodel.hpp"
#include "epirisk/userbase.hpp"

namespace epirisk {

struct ClassificationResult {
  std::vector<int> flagged;  // network ids classified possibly infectious
  double threshold = 0.0;
  double tpr = 0.0;  // flagged & truly infectious / truly infectious
  double ppf = 0.0;  // flagged / user-base size
  double fpr = 0.0;  // flagged & not infectious / not infectious
};

// Ensemble-mean infectiousness probability per user-base node, in network-id
// order of base.nodes.
std::vector<double> ensemble_mean_infectiousness(const Ensemble& ens);

// Flags community-group users whose ensemble-mean <I> exceeds the threshold;
// rates are scored against the surrogate truth over the user base.
ClassificationResult classify(const Ensemble& ens, const ContactNetwork& net,
                              const UserBase& base, const WorldState& truth, double threshold);

struct RocPoint {
  double threshold = 0.0, ppf = 0.0, tpr = 0.0;
};

// Curve traced by lowering the threshold (thresholds sorted descending).
std::vector<RocPoint> roc_curve(const std::vector<double>& risk, const ContactNetwork& net,
                                const UserBase& base, const WorldState& truth,
                                const std::vector<double>& thresholds);

// TPR of a ROC curve at a given PPF by linear interpolation.
double tpr_at_ppf(const std::vector<RocPoint>& curve, double ppf);

// Users with a positive diagnostic test inside the trailing window.
ClassificationResult baseline_test_only(const std::vector<ObservationRecord>& window_obs,
                                        const ContactNetwork& net, const UserBase& base,
                                        const WorldState& truth);

// One >15 min contact event with a positive-tested user during the preceding
// 10 days flags the contact as well.
struct ContactEvent {
  int day = 0;
  int u = 0, v = 0;
  double duration = 0.0;  // days
};

struct ContactHistory {
  double min_duration = 15.0 / 1440.0;  // 15 minutes
  int trailing_days = 10;
  std::vector<ContactEvent> events;  // only events >= min_duration are kept

  void record_day(const ContactNetwork& net, const DaySchedule& sched, int day);
  void drop_before(int day);
};

ClassificationResult baseline_contact_tracing(const std::vector<ObservationRecord>& recent_obs,
                                              const ContactHistory& history, int today,
                                              const ContactNetwork& net, const UserBase& base,
                                              const WorldState& truth);

void export_roc_csv(const std::vector<RocPoint>& curve, int day, const std::string& path,
                    bool append);

}  // namespace epirisk
