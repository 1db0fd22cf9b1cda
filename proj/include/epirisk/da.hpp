#pragma once

#include <string>
#include <vector>

#include "epirisk/observations.hpp"
#include "epirisk/riskmodel.hpp"
#include "epirisk/rng.hpp"

namespace epirisk {

struct PriorSpec {
  double beta_mean = 12.0, beta_sd = 3.0;       // day^-1
  double beta_lo = 1.0, beta_hi = 20.0;         // truncation
  double latent_shape = 1.35, latent_scale = 2.0, latent_floor = 1.0;       // sigma^-1
  double infectious_shape = 1.1, infectious_scale = 2.0, infectious_floor = 1.0;  // gamma^-1
  double hospital_shape = 1.0, hospital_scale = 4.0, hospital_floor = 1.0;  // gamma'^-1
  double initial_alpha = 0.0016, initial_beta = 1.0;  // Beta prior, initial infectious fraction
};

double sample_truncated_normal(double mean, double sd, double lo, double hi, Rng& rng);
double sample_beta(double alpha, double beta, Rng& rng);

enum class InflationStage : std::uint8_t {
  CycleStart = 0,      // widen the previous posterior before any update sees it
  BeforeFinalPass = 1  // between the test pass and the status pass
};

struct DAConfig {
  double window_days = 1.0;
  int ensemble_size = 100;
  double delta_tests = 5.0;    // regularization delta = delta_tests / M for tests and sensors
  double delta_status = 1.0;   // delta = delta_status / M for hospitalization/death
  double inflation_a = 3.0;
  double inflation_b = 0.1;
  InflationStage inflation_stage = InflationStage::CycleStart;
  int spinup_days = 8;
  double conservation_noise_std = 1e-2;
  double status_noise_std = 0.0;  // floor on the hospitalization/death error std
  bool inflate_states = true;     // parameters are never inflated
  bool assimilate_serology = false;
};

// Ensemble of M members: parameters drawn from the priors, each member seeded
// with its own Beta-drawn fraction of infectious nodes.
Ensemble init_ensemble(const ContactNetwork& net, const std::vector<int>& user_nodes,
                       const PriorSpec& prior, int ensemble_size, Rng& rng);

void clip_params_to_prior(Ensemble& ens, const PriorSpec& prior);

// One scalar EAKF update on the observation-space ensemble: returns the
// posterior-adjusted values. Pure function, exposed for the analytic oracle.
void eakf_scalar_update(std::vector<double>& obs_ensemble, double observed, double obs_var,
                        double regularization);

// Sigma + max(delta (Lmax - Lmin), delta_min) I on the local covariance.
Eigen::MatrixXd regularize_covariance(const Eigen::MatrixXd& sigma, double delta,
                                      double delta_min);
double regularization_shift(const Eigen::MatrixXd& sigma, double delta, double delta_min);

struct PassDiagnostics {
  int n_observations = 0;
  double mean_abs_state_increment = 0.0;
};

struct CycleDiagnostics {
  int day = 0;
  double ensemble_spread_i = 0.0;   // mean std of <I> across members
  double mean_abs_sum_error = 0.0;  // mean |sum - 1| after the cycle
  PassDiagnostics pass[3];
};

// Single-pass EAKF smoother update at the window start. Observations update
// only their own node (single-node localization); a conservation
// pseudo-observation with target 1 follows each observed node's real data.
// The high-fidelity (status) pass touches only the S,E,I,R states.
void eakf_update(Ensemble& ens, const Trajectory& traj, double window_start,
                 const std::vector<ObservationRecord>& obs, Fidelity pass,
                 const DAConfig& cfg, const PriorSpec& prior,
                 PassDiagnostics* diag = nullptr);

// Hybrid inflation x -> a(x - xbar) + xbar + N(0, b xbar), clipped to [0,1].
void inflate(Ensemble& ens, double a, double b, Rng& rng);

// Full cycle: three passes in fidelity order (sensors, tests, status), each an
// update at the window start followed by a forecast to the window end;
// inflation is applied once, before the final pass.
void da_cycle(Ensemble& ens, const std::vector<ModelDay>& window_days, double window_start,
              const std::vector<ObservationRecord>& window_obs, const DAConfig& cfg,
              const PriorSpec& prior, const IntegratorConfig& icfg, Rng& inflate_rng,
              Trajectory& traj, CycleDiagnostics* diag = nullptr);

void export_diagnostics_csv(const std::vector<CycleDiagnostics>& rows, const std::string& path);

}  // namespace epirisk
