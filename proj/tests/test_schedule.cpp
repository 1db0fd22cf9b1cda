#include <doctest.h>

#include <cmath>

#include "epirisk/network.hpp"
#include "epirisk/schedule.hpp"

using namespace epirisk;

namespace {

NodeMeta node_with_bounds(int id, double lmin, double lmax) {
  NodeMeta n;
  n.id = id;
  n.lambda_min = lmin;
  n.lambda_max = lmax;
  return n;
}

}  // namespace

TEST_CASE("intervals are ordered, disjoint, and inside the day") {
  Rng rng(1);
  const NodeMeta a = node_with_bounds(0, 4.0, 84.0), b = node_with_bounds(1, 4.0, 84.0);
  for (int day = 0; day < 200; ++day) {
    const auto ivals = sample_edge_intervals(a, b, 10.0, 0.0, rng);
    double prev_end = 0.0;
    for (const Interval& iv : ivals) {
      CHECK(iv.begin >= prev_end);
      CHECK(iv.end > iv.begin);
      CHECK(iv.end <= 1.0);
      prev_end = iv.end;
    }
  }
}

TEST_CASE("constant-rate edge: active fraction matches the stationary value") {
  // lambda_min = lambda_max makes the activation rate constant: Abar = 0.4/day
  Rng rng(7);
  const NodeMeta a = node_with_bounds(0, 4.0, 4.0), b = node_with_bounds(1, 4.0, 4.0);
  const double abar = 0.4, mu = kDeactivationRate;
  const double pi_active = abar / (mu + abar);

  const int n_days = 20000;
  double active_time = 0.0;
  for (int day = 0; day < n_days; ++day)
    for (const Interval& iv : sample_edge_intervals(a, b, 10.0, 0.0, rng))
      active_time += iv.end - iv.begin;
  const double fraction = active_time / n_days;

  // variance of the time average of a two-state Markov chain over T days
  const double sigma = std::sqrt(2.0 * pi_active * (1.0 - pi_active) / ((abar + mu) * n_days));
  CHECK(std::abs(fraction - pi_active) < 3.0 * sigma + pi_active / (abar + mu) / 1.0);
}

TEST_CASE("mean contact duration is two minutes") {
  Rng rng(3);
  const NodeMeta a = node_with_bounds(0, 4.0, 84.0), b = node_with_bounds(1, 4.0, 84.0);
  double total = 0.0;
  int count = 0;
  for (int day = 0; day < 5000; ++day) {
    for (const Interval& iv : sample_edge_intervals(a, b, 10.0, 0.0, rng)) {
      if (iv.end >= 1.0) continue;  // midnight-truncated contacts are censored
      total += iv.end - iv.begin;
      ++count;
    }
  }
  const double mean_minutes = total / count * 24.0 * 60.0;
  CHECK(mean_minutes == doctest::Approx(2.0).epsilon(0.03));
}

TEST_CASE("zero contact bounds produce no activations") {
  Rng rng(9);
  const NodeMeta a = node_with_bounds(0, 0.0, 0.0), b = node_with_bounds(1, 0.0, 0.0);
  for (int day = 0; day < 10; ++day)
    CHECK(sample_edge_intervals(a, b, 10.0, 0.0, rng).empty());
}

TEST_CASE("activations concentrate around midday") {
  Rng rng(11);
  const NodeMeta a = node_with_bounds(0, 4.0, 84.0), b = node_with_bounds(1, 4.0, 84.0);
  int night = 0, midday = 0;
  for (int day = 0; day < 3000; ++day) {
    for (const Interval& iv : sample_edge_intervals(a, b, 10.0, 0.0, rng)) {
      if (iv.begin < 0.2 || iv.begin > 0.8) ++night;
      if (iv.begin > 0.4 && iv.begin < 0.6) ++midday;
    }
  }
  CHECK(midday > 3 * night);
}

TEST_CASE("schedule respects suspended and retired state") {
  ContactNetwork net = generate_static_network(200, 5);
  Rng rng(2);
  const int node = 150;
  transfer_to_hospital(net, node, rng);
  DaySchedule sched = sample_day_schedule(net, 0, rng);
  for (int e : net.incident[node])
    if (!net.edges[e].ward) CHECK(sched.edge_intervals[e].empty());
  discharge(net, node);

  retire_node(net, 151);
  DaySchedule sched2 = sample_day_schedule(net, 1, rng);
  for (int e : net.incident[151]) CHECK(sched2.edge_intervals[e].empty());
}

TEST_CASE("truncation closes the active interval and drops later ones") {
  std::vector<Interval> ivals = {{0.1, 0.2}, {0.3, 0.4}, {0.5, 0.6}};
  truncate_intervals(ivals, 0.35);
  REQUIRE(ivals.size() == 2);
  CHECK(ivals[1].begin == 0.3);
  CHECK(ivals[1].end == 0.35);

  std::vector<Interval> between = {{0.1, 0.2}, {0.5, 0.6}};
  truncate_intervals(between, 0.3);
  REQUIRE(between.size() == 1);
  CHECK(between[0].end == 0.2);
}

TEST_CASE("active_overlap accumulates clipped interval lengths") {
  const std::vector<Interval> ivals = {{0.1, 0.2}, {0.3, 0.4}};
  CHECK(active_overlap(ivals, 0.0, 1.0) == doctest::Approx(0.2));
  CHECK(active_overlap(ivals, 0.15, 0.35) == doctest::Approx(0.1));
  CHECK(active_overlap(ivals, 0.45, 0.9) == doctest::Approx(0.0));
}
