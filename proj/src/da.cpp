#include "epirisk/da.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "epirisk/io.hpp"

namespace epirisk {

double sample_truncated_normal(double mean, double sd, double lo, double hi, Rng& rng) {
  std::normal_distribution<double> normal(mean, sd);
  for (int k = 0; k < 10000; ++k) {
    const double x = normal(rng);
    if (x >= lo && x <= hi) return x;
  }
  throw std::runtime_error("truncated normal: acceptance region too small");
}

double sample_beta(double alpha, double beta, Rng& rng) {
  std::gamma_distribution<double> ga(alpha, 1.0), gb(beta, 1.0);
  const double x = ga(rng), y = gb(rng);
  return x + y > 0.0 ? x / (x + y) : 0.0;
}

Ensemble init_ensemble(const ContactNetwork& net, const std::vector<int>& user_nodes,
                       const PriorSpec& prior, int ensemble_size, Rng& rng) {
  if (ensemble_size < 2) throw std::invalid_argument("init_ensemble: ensemble size must be >= 2");
  Ensemble ens;
  RiskModel& model = ens.model;
  model.n = static_cast<int>(user_nodes.size());
  model.node_ids = user_nodes;
  model.model_index_of.assign(net.n_nodes(), -1);
  for (int k = 0; k < model.n; ++k) model.model_index_of[user_nodes[k]] = k;
  model.khat = net.mean_degree_community;
  model.user_count = model.n;
  model.h_frac.resize(model.n);
  model.d_frac.resize(model.n);
  model.dp_frac.resize(model.n);
  model.k_ext.resize(model.n);
  model.w_mean.resize(model.n);
  for (int k = 0; k < model.n; ++k) {
    const NodeMeta& nm = net.nodes[user_nodes[k]];
    const AgeRates o = age_outcome_rates(nm.age_band);
    model.h_frac[k] = o.h;
    model.d_frac[k] = o.d;
    model.dp_frac[k] = o.dp;
    model.k_ext[k] = nm.k_ext;
    model.w_mean[k] = mean_edge_activity(nm, model.khat);
  }

  std::gamma_distribution<double> latent(prior.latent_shape, prior.latent_scale);
  std::gamma_distribution<double> infectious(prior.infectious_shape, prior.infectious_scale);
  std::gamma_distribution<double> hospital(prior.hospital_shape, prior.hospital_scale);

  std::vector<int> order(model.n);
  for (int k = 0; k < model.n; ++k) order[k] = k;

  ens.states.reserve(ensemble_size);
  ens.params.reserve(ensemble_size);
  for (int m = 0; m < ensemble_size; ++m) {
    MemberParams pr;
    pr.beta.resize(model.n);
    pr.sigma.resize(model.n);
    pr.gamma.resize(model.n);
    pr.gamma_h.resize(model.n);
    for (int k = 0; k < model.n; ++k) {
      pr.beta[k] =
          sample_truncated_normal(prior.beta_mean, prior.beta_sd, prior.beta_lo, prior.beta_hi, rng);
      pr.sigma[k] = 1.0 / (prior.latent_floor + latent(rng));
      pr.gamma[k] = 1.0 / (prior.infectious_floor + infectious(rng));
      pr.gamma_h[k] = 1.0 / (prior.hospital_floor + hospital(rng));
    }
    ens.params.push_back(std::move(pr));

    MemberState st = MemberState::zero(model.n);
    st.s.setOnes();
    const double fraction = sample_beta(prior.initial_alpha, prior.initial_beta, rng);
    // each member is seeded with at least one infectious node; an ensemble with
    // no infection mass anywhere is a fixed point the localized filter cannot
    // leave
    const int n_seed =
        std::clamp(static_cast<int>(std::ceil(fraction * model.n)), 1, model.n);
    std::shuffle(order.begin(), order.end(), rng);
    for (int k = 0; k < n_seed; ++k) {
      st.s[order[k]] = 0.0;
      st.i[order[k]] = 1.0;
    }
    ens.states.push_back(std::move(st));
  }
  return ens;
}

void clip_params_to_prior(Ensemble& ens, const PriorSpec& prior) {
  const double rate_floor = 1e-4;
  for (MemberParams& pr : ens.params) {
    pr.beta = pr.beta.min(prior.beta_hi).max(prior.beta_lo);
    pr.sigma = pr.sigma.min(1.0 / prior.latent_floor).max(rate_floor);
    pr.gamma = pr.gamma.min(1.0 / prior.infectious_floor).max(rate_floor);
    pr.gamma_h = pr.gamma_h.min(1.0 / prior.hospital_floor).max(rate_floor);
  }
}

void eakf_scalar_update(std::vector<double>& obs_ensemble, double observed, double obs_var,
                        double regularization) {
  const int m = static_cast<int>(obs_ensemble.size());
  double mean = 0.0;
  for (double x : obs_ensemble) mean += x;
  mean /= m;
  double var = 0.0;
  for (double x : obs_ensemble) var += (x - mean) * (x - mean);
  var /= (m - 1);
  const double var_reg = var + regularization;
  if (var_reg <= 0.0) return;  // collapsed prior with no regularization: no update
  double post_mean, shrink;
  if (obs_var <= 0.0) {
    post_mean = observed;  // exact observation pins the posterior
    shrink = 0.0;
  } else {
    const double post_var = 1.0 / (1.0 / var_reg + 1.0 / obs_var);
    post_mean = post_var * (mean / var_reg + observed / obs_var);
    shrink = std::sqrt(post_var / var_reg);
  }
  for (double& x : obs_ensemble) x = post_mean + shrink * (x - mean);
}

double regularization_shift(const Eigen::MatrixXd& sigma, double delta, double delta_min) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  const double lmax = es.eigenvalues().maxCoeff();
  return std::max(delta * (lmax - lmin), delta_min);
}

Eigen::MatrixXd regularize_covariance(const Eigen::MatrixXd& sigma, double delta,
                                      double delta_min) {
  const double shift = regularization_shift(sigma, delta, delta_min);
  return sigma + shift * Eigen::MatrixXd::Identity(sigma.rows(), sigma.cols());
}

namespace {

constexpr int kStateRows = 6;
constexpr int kParamRows = 4;
constexpr int kLocalRows = kStateRows + kParamRows;

int component_of(ObsKind kind) {
  switch (kind) {
    case ObsKind::TestPositive:
    case ObsKind::TestNegative:
    case ObsKind::SensorPositive:
    case ObsKind::SensorNegative:
      return 2;  // I
    case ObsKind::Hospitalized:
    case ObsKind::NotHospitalized:
      return 3;  // H
    case ObsKind::Deceased:
    case ObsKind::Alive:
      return 5;  // D
    case ObsKind::SeroPositive:
    case ObsKind::SeroNegative:
      return 4;  // R
  }
  return 2;
}

// sequential scalar update of a local row block: regress the adjusted
// observation increments onto the update-set rows
void apply_scalar_obs(Eigen::MatrixXd& local, int obs_row, double observed, double obs_var,
                      double shift, const std::vector<int>& update_rows) {
  const int m = static_cast<int>(local.cols());
  Eigen::VectorXd prior_row = local.row(obs_row).transpose();
  const double mean = prior_row.mean();
  Eigen::VectorXd dev = prior_row.array() - mean;
  const double var = dev.squaredNorm() / (m - 1);
  const double var_reg = var + shift;
  if (var_reg <= 0.0) return;

  std::vector<double> adjusted(prior_row.data(), prior_row.data() + m);
  eakf_scalar_update(adjusted, observed, obs_var, shift);
  Eigen::VectorXd delta(m);
  for (int k = 0; k < m; ++k) delta[k] = adjusted[k] - prior_row[k];

  for (int row : update_rows) {
    if (row == obs_row) {
      local.row(obs_row) += (var / var_reg) * delta.transpose();
      continue;
    }
    Eigen::VectorXd zrow = local.row(row).transpose();
    const double zmean = zrow.mean();
    double cov = 0.0;
    for (int k = 0; k < m; ++k) cov += (zrow[k] - zmean) * dev[k];
    cov /= (m - 1);
    local.row(row) += (cov / var_reg) * delta.transpose();
  }
}

}  // namespace

void eakf_update(Ensemble& ens, const Trajectory& traj, double window_start,
                 const std::vector<ObservationRecord>& obs, Fidelity pass, const DAConfig& cfg,
                 const PriorSpec& prior, PassDiagnostics* diag) {
  (void)window_start;
  const int m = ens.size();
  const double delta =
      (pass == Fidelity::High ? cfg.delta_status : cfg.delta_tests) / m;

  // group this pass's observations by model node, ascending node id
  const bool status_pass = pass == Fidelity::High;
  const double noise_floor = status_pass ? cfg.status_noise_std : 0.0;
  std::map<int, std::vector<const ObservationRecord*>> by_node;
  double noise_acc = 0.0;
  int noise_count = 0;
  for (const ObservationRecord& r : obs) {
    if (fidelity_of(r.kind) != pass) continue;
    const int node = ens.model.model_index_of[r.node];
    if (node < 0) continue;  // not a user
    by_node[node].push_back(&r);
    const double sd = std::max(r.error_rate, noise_floor);
    noise_acc += sd * sd;
    ++noise_count;
  }
  // the well-posedness floor lives in the covariance units, so the pass's mean
  // observational noise enters as a variance
  const double delta_min = noise_count ? noise_acc / noise_count : 0.0;
  if (diag) {
    diag->n_observations = noise_count;
    diag->mean_abs_state_increment = 0.0;
  }
  if (by_node.empty()) return;

  double increment_acc = 0.0;
  long long increment_count = 0;

  for (const auto& [node, records] : by_node) {
    const int n_obs = static_cast<int>(records.size());
    Eigen::MatrixXd local(kLocalRows + n_obs, m);
    for (int k = 0; k < m; ++k) {
      const MemberState& st = ens.states[k];
      const MemberParams& pr = ens.params[k];
      local(0, k) = st.s[node];
      local(1, k) = st.e[node];
      local(2, k) = st.i[node];
      local(3, k) = st.h[node];
      local(4, k) = st.r[node];
      local(5, k) = st.d[node];
      local(6, k) = pr.beta[node];
      local(7, k) = pr.sigma[node];
      local(8, k) = pr.gamma[node];
      local(9, k) = pr.gamma_h[node];
      for (int j = 0; j < n_obs; ++j)
        local(kLocalRows + j, k) =
            traj.value(k, component_of(records[j]->kind), node, records[j]->time);
    }

    // regularization from the eigenvalues of the node's observation-space
    // covariance (the matrix whose inversion the filter must keep well posed;
    // delta_min is an observational noise std, so the units are consistent)
    Eigen::MatrixXd obs_rows = local.bottomRows(n_obs);
    Eigen::MatrixXd centered = obs_rows.colwise() - obs_rows.rowwise().mean();
    Eigen::MatrixXd cov = centered * centered.transpose() / (m - 1);
    const double shift = regularization_shift(cov, delta, delta_min);

    std::vector<int> update_rows;
    if (status_pass) {
      update_rows = {0, 1, 2, 4};  // only the SEIR states move
    } else {
      for (int r = 0; r < kLocalRows; ++r) update_rows.push_back(r);
    }
    for (int j = 0; j < n_obs; ++j) update_rows.push_back(kLocalRows + j);

    const Eigen::MatrixXd before = local.topRows(kStateRows);
    for (int j = 0; j < n_obs; ++j) {
      const ObservationRecord& r = *records[j];
      const double sd = std::max(r.error_rate, noise_floor);
      apply_scalar_obs(local, kLocalRows + j, r.observed_value, sd * sd, shift, update_rows);
    }

    // conservation pseudo-observation: total probability has target value 1
    {
      Eigen::MatrixXd aug(local.rows() + 1, m);
      aug.topRows(local.rows()) = local;
      aug.row(local.rows()) = local.topRows(kStateRows).colwise().sum();
      std::vector<int> rows = status_pass ? std::vector<int>{0, 1, 2, 4}
                                          : std::vector<int>{0, 1, 2, 3, 4, 5};
      rows.push_back(static_cast<int>(local.rows()));
      apply_scalar_obs(aug, static_cast<int>(local.rows()), 1.0,
                       cfg.conservation_noise_std * cfg.conservation_noise_std, shift, rows);
      local = aug.topRows(local.rows());
    }

    increment_acc += (local.topRows(kStateRows) - before).cwiseAbs().sum();
    increment_count += kStateRows * m;

    if (!local.allFinite())
      throw std::runtime_error("eakf_update: non-finite ensemble values at node " +
                               std::to_string(ens.model.node_ids[node]));

    for (int k = 0; k < m; ++k) {
      MemberState& st = ens.states[k];
      MemberParams& pr = ens.params[k];
      st.s[node] = std::clamp(local(0, k), 0.0, 1.0);
      st.e[node] = std::clamp(local(1, k), 0.0, 1.0);
      st.i[node] = std::clamp(local(2, k), 0.0, 1.0);
      st.h[node] = std::clamp(local(3, k), 0.0, 1.0);
      st.r[node] = std::clamp(local(4, k), 0.0, 1.0);
      st.d[node] = std::clamp(local(5, k), 0.0, 1.0);
      if (!status_pass) {
        pr.beta[node] = std::clamp(local(6, k), prior.beta_lo, prior.beta_hi);
        pr.sigma[node] = std::clamp(local(7, k), 1e-4, 1.0 / prior.latent_floor);
        pr.gamma[node] = std::clamp(local(8, k), 1e-4, 1.0 / prior.infectious_floor);
        pr.gamma_h[node] = std::clamp(local(9, k), 1e-4, 1.0 / prior.hospital_floor);
      }
    }
  }

  if (diag && increment_count)
    diag->mean_abs_state_increment = increment_acc / static_cast<double>(increment_count);
}

void inflate(Ensemble& ens, double a, double b, Rng& rng) {
  if (a < 1.0 || b < 0.0) throw std::invalid_argument("inflate: require a >= 1 and b >= 0");
  if (a == 1.0 && b == 0.0) return;
  const int m = ens.size();
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int c = 0; c < 6; ++c) {
    for (int node = 0; node < ens.model.n; ++node) {
      double mean = 0.0;
      for (int k = 0; k < m; ++k) mean += ens.states[k].component(c)[node];
      mean /= m;
      const double sd = b * mean;
      for (int k = 0; k < m; ++k) {
        double& x = ens.states[k].component(c)[node];
        x = a * (x - mean) + mean + (sd > 0.0 ? sd * noise(rng) : 0.0);
        x = std::clamp(x, 0.0, 1.0);
      }
    }
  }
}

void da_cycle(Ensemble& ens, const std::vector<ModelDay>& window_days, double window_start,
              const std::vector<ObservationRecord>& window_obs, const DAConfig& cfg,
              const PriorSpec& prior, const IntegratorConfig& icfg, Rng& inflate_rng,
              Trajectory& traj, CycleDiagnostics* diag) {
  const double t0 = window_start;
  const double t1 = window_start + cfg.window_days;

  auto has_pass = [&](Fidelity f) {
    for (const ObservationRecord& r : window_obs)
      if (fidelity_of(r.kind) == f && ens.model.model_index_of[r.node] >= 0) return true;
    return false;
  };
  auto forecast = [&](const std::vector<MemberState>& start) {
    ens.states = start;
    integrate(ens, window_days, t0, t1, icfg, &traj);
  };

  std::vector<MemberState> start = ens.states;

  // hybrid inflation is applied once per cycle; at CycleStart the widened
  // spread is what every update pass sees, at BeforeFinalPass it sits between
  // the test pass and the status pass (the window is re-forecast either way so
  // predicted observations stay consistent with the inflated states)
  if (cfg.inflate_states && cfg.inflation_stage == InflationStage::CycleStart) {
    inflate(ens, cfg.inflation_a, cfg.inflation_b, inflate_rng);
    start = ens.states;
  }

  // prior trajectory over the window
  forecast(start);

  // pass 1: lowest fidelity (sensors)
  if (has_pass(Fidelity::Low)) {
    ens.states = start;
    eakf_update(ens, traj, t0, window_obs, Fidelity::Low, cfg, prior,
                diag ? &diag->pass[0] : nullptr);
    start = ens.states;
    forecast(start);
  }

  // pass 2: diagnostic tests
  if (has_pass(Fidelity::Medium)) {
    ens.states = start;
    eakf_update(ens, traj, t0, window_obs, Fidelity::Medium, cfg, prior,
                diag ? &diag->pass[1] : nullptr);
    start = ens.states;
    forecast(start);
  } else {
    ens.states = start;
  }

  if (cfg.inflate_states && cfg.inflation_stage == InflationStage::BeforeFinalPass) {
    inflate(ens, cfg.inflation_a, cfg.inflation_b, inflate_rng);
    start = ens.states;
    forecast(start);
  }

  // pass 3: hospitalization and death status
  if (has_pass(Fidelity::High)) {
    ens.states = start;
    eakf_update(ens, traj, t0, window_obs, Fidelity::High, cfg, prior,
                diag ? &diag->pass[2] : nullptr);
    start = ens.states;
    forecast(start);
  }

  if (diag) {
    const int m = ens.size();
    double spread = 0.0, sum_err = 0.0;
    for (int node = 0; node < ens.model.n; ++node) {
      double mean = 0.0;
      for (int k = 0; k < m; ++k) mean += ens.states[k].i[node];
      mean /= m;
      double var = 0.0;
      for (int k = 0; k < m; ++k) {
        const double d = ens.states[k].i[node] - mean;
        var += d * d;
      }
      spread += std::sqrt(var / (m - 1));
      for (int k = 0; k < m; ++k) {
        const MemberState& st = ens.states[k];
        sum_err += std::abs(st.s[node] + st.e[node] + st.i[node] + st.h[node] + st.r[node] +
                            st.d[node] - 1.0);
      }
    }
    diag->ensemble_spread_i = spread / ens.model.n;
    diag->mean_abs_sum_error = sum_err / (static_cast<double>(ens.model.n) * m);
  }
}

void export_diagnostics_csv(const std::vector<CycleDiagnostics>& rows, const std::string& path) {
  CsvWriter out(path);
  out.row({"day", "ensemble_spread_i", "mean_abs_sum_error", "obs_low", "upd_low", "obs_med",
           "upd_med", "obs_high", "upd_high"});
  for (const CycleDiagnostics& r : rows) {
    out.row({std::to_string(r.day), format_double(r.ensemble_spread_i),
             format_double(r.mean_abs_sum_error), std::to_string(r.pass[0].n_observations),
             format_double(r.pass[0].mean_abs_state_increment),
             std::to_string(r.pass[1].n_observations),
             format_double(r.pass[1].mean_abs_state_increment),
             std::to_string(r.pass[2].n_observations),
             format_double(r.pass[2].mean_abs_state_increment)});
  }
}

}  // namespace epirisk
