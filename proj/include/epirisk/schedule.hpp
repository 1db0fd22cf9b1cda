#pragma once

#include <string>
#include <vector>

#include "epirisk/network.hpp"
#include "epirisk/rng.hpp"

namespace epirisk {

// Contact interval within one simulated day, times in days since midnight.
struct Interval {
  double begin = 0.0, end = 0.0;
};

// One day's realized contact intervals per edge. Regenerated at midnight;
// admissions extend it mid-day (new ward edges, truncated static edges).
struct DaySchedule {
  int day = 0;
  std::vector<std::vector<Interval>> edge_intervals;

  void ensure_size(std::size_t n_edges) {
    if (edge_intervals.size() < n_edges) edge_intervals.resize(n_edges);
  }
};

// Independent birth-death process per live edge: inhomogeneous activations
// (thinning against the daily peak rate) with Exp(mu) durations, truncated
// at midnight.
DaySchedule sample_day_schedule(const ContactNetwork& net, int day_index, Rng& rng);

// Sample intervals for a single edge on [t_from, 1). Used by the daily
// regeneration and by mid-day rewiring after admissions/discharges.
std::vector<Interval> sample_edge_intervals(const NodeMeta& a, const NodeMeta& b, double khat,
                                            double t_from, Rng& rng,
                                            double mu = kDeactivationRate);

// Close an active contact at time t and drop the edge's later intervals
// (the edge stops existing mid-day, e.g. at hospital admission).
void truncate_intervals(std::vector<Interval>& intervals, double t);

// Total active time of the intervals inside [t0, t1].
double active_overlap(const std::vector<Interval>& intervals, double t0, double t1);

void export_schedule_csv(const DaySchedule& sched, const ContactNetwork& net,
                         const std::string& path, bool append);

}  // namespace epirisk
