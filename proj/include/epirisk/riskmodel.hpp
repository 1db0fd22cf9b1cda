#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "epirisk/network.hpp"
#include "epirisk/schedule.hpp"

namespace epirisk {

using Eigen::ArrayXd;

// Marginal SEIHRD probabilities of one ensemble member over the model nodes.
struct MemberState {
  ArrayXd s, e, i, h, r, d;

  static MemberState zero(int n);
  void clip01();
  double* component(int c);  // 0..5 in SEIHRD order
  const double* component(int c) const;
};

// Per-node learned parameters of one member.
struct MemberParams {
  ArrayXd beta, sigma, gamma, gamma_h;  // day^-1
};

// Shared per-node data of the reduced master equations. Model nodes are the
// user base, compactly reindexed; node_ids maps back to network ids.
struct RiskModel {
  int n = 0;
  std::vector<int> node_ids;
  std::vector<int> model_index_of;  // network id -> model index (-1 outside)
  ArrayXd h_frac, d_frac, dp_frac;  // age-fixed outcome fractions
  ArrayXd k_ext;                    // external static neighbors per node
  ArrayXd w_mean;                   // stationary edge-activity probability
  double khat = 10.0;
  double user_count = 0.0;          // Ntilde, prevalence floor 1/Ntilde
  double ward_modifier = 0.1;       // a (= a') on ward edges
};

struct Ensemble {
  RiskModel model;
  std::vector<MemberState> states;
  std::vector<MemberParams> params;
  int size() const { return static_cast<int>(states.size()); }
};

// A user-base edge with its realized contact intervals for one day.
struct ModelEdge {
  int a = 0, b = 0;  // model indices
  bool ward = false;
  std::vector<Interval> intervals;
};

struct ModelDay {
  int day = 0;
  std::vector<ModelEdge> edges;
};

// Build the model's view of one day's contacts (both endpoints in the user
// base, live edges only).
ModelDay build_model_day(const ContactNetwork& net, const DaySchedule& sched,
                         const RiskModel& model);

// Rebuild per-day model edges from an exported schedule file, for exact
// replay of recorded runs.
std::map<int, std::vector<ModelEdge>> load_schedule_edges_csv(const std::string& path,
                                                              const RiskModel& model);

// Edge activity averaged over a step plus the four directional closure
// coefficients (source -> target for I and H).
struct ActiveEdge {
  int a = 0, b = 0;
  double w = 0.0;
  bool ward = false;
  double c_si_ab = 1.0, c_si_ba = 1.0;  // ab: source a infecting b
  double c_sh_ab = 1.0, c_sh_ba = 1.0;
};

// Ensemble analogue of the rescaled joint probability; a denominator below
// the floor falls back to mean field (coefficient 1).
void compute_closure(const std::vector<MemberState>& members, std::vector<ActiveEdge>& edges,
                     double denom_floor = 1e-12);

// Total infectious pressure zeta_i. The <S_i> factor cancels analytically, so
// the returned rate is well defined at <S_i> = 0.
ArrayXd infectious_pressure(const MemberState& st, const MemberParams& pr,
                            const std::vector<ActiveEdge>& edges, const RiskModel& model);

// P(t) = max(mean infectiousness probability over nodes and members, 1/Ntilde).
double estimate_prevalence(const Ensemble& ens);
double estimate_resistance_prevalence(const Ensemble& ens);

// All six reduced master equations, including the exogenous term. The
// components of the derivative sum to zero per node.
void master_rhs(const MemberState& st, const MemberParams& pr, const RiskModel& model,
                const std::vector<ActiveEdge>& edges, double prevalence, MemberState& deriv);

struct IntegratorConfig {
  double rtol = 1e-4;
  double atol = 1e-6;
  double h_max = 0.125;     // 3 hours
  double h_min = 1e-10;
  int subgrid_per_day = 8;  // trajectory snapshots every 3 hours
};

// Ensemble trajectory snapshots on the integrator's daily sub-grid.
struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<MemberState>> snapshots;  // [time][member]

  // linear interpolation between stored sub-grid snapshots
  double value(int member, int component, int node, double t) const;
  void clear() {
    times.clear();
    snapshots.clear();
  }
};

// Embedded RKF 4(5) over the whole ensemble: closure and step-averaged edge
// weights are recomputed once per accepted step, probabilities are clipped to
// [0,1] after each step. Throws on step-size underflow.
void integrate(Ensemble& ens, const std::vector<ModelDay>& days, double t0, double t1,
               const IntegratorConfig& cfg = {}, Trajectory* traj = nullptr);

void export_ensemble_mean_csv(const Ensemble& ens, double t, const std::string& path, bool append);
void save_ensemble_binary(const Ensemble& ens, const std::string& path);
void load_ensemble_binary(Ensemble& ens, const std::string& path);

}  // namespace epirisk
