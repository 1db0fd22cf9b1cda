#include "epirisk/schedule.hpp"

#include <algorithm>
#include <cmath>

#include "epirisk/io.hpp"

namespace epirisk {

std::vector<Interval> sample_edge_intervals(const NodeMeta& a, const NodeMeta& b, double khat,
                                            double t_from, Rng& rng, double mu) {
  std::vector<Interval> out;
  const double peak = edge_peak_rate(a, b, khat);
  if (peak <= 0.0) return out;

  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::exponential_distribution<double> birth(peak);
  std::exponential_distribution<double> death(mu);

  double t = t_from;
  for (;;) {
    // next activation of the inhomogeneous process by thinning against the peak
    for (;;) {
      t += birth(rng);
      if (t >= 1.0) return out;
      if (uni(rng) * peak <= edge_activation_rate(a, b, t, khat)) break;
    }
    const double end = mu > 0.0 ? t + death(rng) : 1.0;
    if (end >= 1.0) {
      out.push_back({t, 1.0});  // contact closed at midnight
      return out;
    }
    out.push_back({t, end});
    t = end;
  }
}

DaySchedule sample_day_schedule(const ContactNetwork& net, int day_index, Rng& rng) {
  DaySchedule sched;
  sched.day = day_index;
  sched.edge_intervals.resize(net.edges.size());
  for (std::size_t e = 0; e < net.edges.size(); ++e) {
    if (!net.edge_ready(static_cast<int>(e))) continue;
    const Edge& ed = net.edges[e];
    sched.edge_intervals[e] = sample_edge_intervals(net.nodes[ed.u], net.nodes[ed.v],
                                                    net.mean_degree_community, 0.0, rng);
  }
  return sched;
}

void truncate_intervals(std::vector<Interval>& intervals, double t) {
  while (!intervals.empty() && intervals.back().begin >= t) intervals.pop_back();
  if (!intervals.empty() && intervals.back().end > t) intervals.back().end = t;
}

double active_overlap(const std::vector<Interval>& intervals, double t0, double t1) {
  double acc = 0.0;
  for (const Interval& iv : intervals) {
    if (iv.end <= t0) continue;
    if (iv.begin >= t1) break;
    acc += std::min(iv.end, t1) - std::max(iv.begin, t0);
  }
  return acc;
}

void export_schedule_csv(const DaySchedule& sched, const ContactNetwork& net,
                         const std::string& path, bool append) {
  CsvWriter out(path, append);
  if (out.fresh()) out.row({"day", "u", "v", "ward", "begin", "end"});
  for (std::size_t e = 0; e < sched.edge_intervals.size(); ++e) {
    const Edge& ed = net.edges[e];
    for (const Interval& iv : sched.edge_intervals[e]) {
      out.row({std::to_string(sched.day), std::to_string(ed.u), std::to_string(ed.v),
               ed.ward ? "1" : "0", format_double(iv.begin), format_double(iv.end)});
    }
  }
}

}  // namespace epirisk
