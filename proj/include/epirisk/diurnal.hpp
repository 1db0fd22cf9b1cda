#pragma once

#include <algorithm>
#include <cmath>

namespace epirisk {

// Mean contact duration is 2 minutes, so edges deactivate at 720 / day.
inline constexpr double kDeactivationRate = 720.0;  // day^-1
inline constexpr double kDefaultLambdaMin = 4.0;    // day^-1
inline constexpr double kDefaultLambdaMax = 84.0;   // day^-1

// Diurnal envelope: ~0 at night, 1 at noon. t in days since midnight.
inline double diurnal_envelope(double t) {
  const double c = std::cos(M_PI * t);
  const double c4 = c * c * c * c;
  const double b = 1.0 - c4;
  return b * b * b * b;
}

// Edge activation rate for effective bounds lmin, lmax (the pairwise mins of
// the endpoints' bounds) in day^-1. Floor term applies at night.
inline double activation_rate(double lmin, double lmax, double t, double khat) {
  return std::max(lmin, lmax * diurnal_envelope(t)) / khat;
}

// Day average of activation_rate by composite Simpson quadrature. The
// integrand has kinks where the envelope crosses the floor, so use a fine
// grid; this is only evaluated when contact bounds change.
inline double day_average_rate(double lmin, double lmax, double khat, int panels = 16384) {
  const double h = 1.0 / panels;
  double acc = activation_rate(lmin, lmax, 0.0, khat) + activation_rate(lmin, lmax, 1.0, khat);
  for (int k = 1; k < panels; ++k)
    acc += (k % 2 ? 4.0 : 2.0) * activation_rate(lmin, lmax, k * h, khat);
  return acc * h / 3.0;
}

// Stationary probability of an edge of this node being active given the
// single-node day-averaged rate.
inline double stationary_edge_activity(double day_avg_rate, double mu = kDeactivationRate) {
  if (day_avg_rate <= 0.0) return 0.0;
  return day_avg_rate / (mu + day_avg_rate);
}

}  // namespace epirisk
