#include "epirisk/classify.hpp"

#include <algorithm>
#include <unordered_set>

#include "epirisk/io.hpp"

namespace epirisk {

std::vector<double> ensemble_mean_infectiousness(const Ensemble& ens) {
  ArrayXd acc = ArrayXd::Zero(ens.model.n);
  for (const MemberState& st : ens.states) acc += st.i;
  acc /= ens.size();
  return std::vector<double>(acc.data(), acc.data() + ens.model.n);
}

namespace {

ClassificationResult score_flags(const std::vector<int>& flagged, const ContactNetwork& net,
                                 const UserBase& base, const WorldState& truth,
                                 double threshold) {
  (void)net;
  ClassificationResult res;
  res.flagged = flagged;
  res.threshold = threshold;
  int truly_infectious = 0;
  for (int id : base.nodes) truly_infectious += truth.health[id] == Health::I;
  int tp = 0;
  for (int id : flagged) tp += truth.health[id] == Health::I;
  const int negatives = base.size() - truly_infectious;
  res.tpr = truly_infectious ? static_cast<double>(tp) / truly_infectious : 0.0;
  res.ppf = base.size() ? static_cast<double>(flagged.size()) / base.size() : 0.0;
  res.fpr = negatives ? static_cast<double>(flagged.size() - tp) / negatives : 0.0;
  return res;
}

}  // namespace

ClassificationResult classify(const Ensemble& ens, const ContactNetwork& net,
                              const UserBase& base, const WorldState& truth, double threshold) {
  std::vector<int> flagged;
  const std::vector<double> risk = ensemble_mean_infectiousness(ens);
  for (int k = 0; k < ens.model.n; ++k) {
    const int id = ens.model.node_ids[k];
    if (net.nodes[id].group != Group::Community) continue;
    if (risk[k] > threshold) flagged.push_back(id);
  }
  return score_flags(flagged, net, base, truth, threshold);
}

std::vector<RocPoint> roc_curve(const std::vector<double>& risk, const ContactNetwork& net,
                                const UserBase& base, const WorldState& truth,
                                const std::vector<double>& thresholds) {
  std::vector<RocPoint> curve;
  int truly_infectious = 0;
  for (int id : base.nodes) truly_infectious += truth.health[id] == Health::I;
  for (double c : thresholds) {
    int tp = 0, flagged = 0;
    for (std::size_t k = 0; k < base.nodes.size(); ++k) {
      const int id = base.nodes[k];
      if (net.nodes[id].group != Group::Community) continue;
      if (risk[k] > c) {
        ++flagged;
        tp += truth.health[id] == Health::I;
      }
    }
    RocPoint p;
    p.threshold = c;
    p.ppf = base.size() ? static_cast<double>(flagged) / base.size() : 0.0;
    p.tpr = truly_infectious ? static_cast<double>(tp) / truly_infectious : 0.0;
    curve.push_back(p);
  }
  return curve;
}

double tpr_at_ppf(const std::vector<RocPoint>& curve, double ppf) {
  if (curve.empty()) return 0.0;
  // curve is nondecreasing in ppf (thresholds descending)
  if (ppf <= curve.front().ppf) {
    // proportional credit below the first support point (chord from origin)
    return curve.front().ppf > 0.0 ? curve.front().tpr * ppf / curve.front().ppf : 0.0;
  }
  for (std::size_t k = 1; k < curve.size(); ++k) {
    if (curve[k].ppf >= ppf) {
      const double span = curve[k].ppf - curve[k - 1].ppf;
      const double a = span > 0.0 ? (ppf - curve[k - 1].ppf) / span : 1.0;
      return (1.0 - a) * curve[k - 1].tpr + a * curve[k].tpr;
    }
  }
  return curve.back().tpr;
}

ClassificationResult baseline_test_only(const std::vector<ObservationRecord>& window_obs,
                                        const ContactNetwork& net, const UserBase& base,
                                        const WorldState& truth) {
  std::vector<int> flagged;
  std::unordered_set<int> seen;
  for (const ObservationRecord& r : window_obs) {
    if (r.kind != ObsKind::TestPositive) continue;
    if (!base.contains(r.node)) continue;
    if (seen.insert(r.node).second) flagged.push_back(r.node);
  }
  std::sort(flagged.begin(), flagged.end());
  return score_flags(flagged, net, base, truth, 0.0);
}

void ContactHistory::record_day(const ContactNetwork& net, const DaySchedule& sched, int day) {
  for (std::size_t e = 0; e < sched.edge_intervals.size(); ++e) {
    const Edge& ed = net.edges[e];
    for (const Interval& iv : sched.edge_intervals[e]) {
      const double dur = iv.end - iv.begin;
      if (dur >= min_duration) events.push_back({day, ed.u, ed.v, dur});
    }
  }
}

void ContactHistory::drop_before(int day) {
  events.erase(std::remove_if(events.begin(), events.end(),
                              [&](const ContactEvent& ev) { return ev.day < day; }),
               events.end());
}

ClassificationResult baseline_contact_tracing(const std::vector<ObservationRecord>& recent_obs,
                                              const ContactHistory& history, int today,
                                              const ContactNetwork& net, const UserBase& base,
                                              const WorldState& truth) {
  std::unordered_set<int> positives;
  for (const ObservationRecord& r : recent_obs)
    if (r.kind == ObsKind::TestPositive && base.contains(r.node)) positives.insert(r.node);

  std::unordered_set<int> flagged_set(positives.begin(), positives.end());
  for (const ContactEvent& ev : history.events) {
    if (ev.day < today - history.trailing_days) continue;
    if (positives.count(ev.u) && base.contains(ev.v)) flagged_set.insert(ev.v);
    if (positives.count(ev.v) && base.contains(ev.u)) flagged_set.insert(ev.u);
  }
  std::vector<int> flagged(flagged_set.begin(), flagged_set.end());
  std::sort(flagged.begin(), flagged.end());
  return score_flags(flagged, net, base, truth, 0.0);
}

void export_roc_csv(const std::vector<RocPoint>& curve, int day, const std::string& path,
                    bool append) {
  CsvWriter out(path, append);
  if (out.fresh()) out.row({"day", "threshold", "ppf", "tpr"});
  for (const RocPoint& p : curve)
    out.row({std::to_string(day), format_double(p.threshold), format_double(p.ppf),
             format_double(p.tpr)});
}

}  // namespace epirisk
