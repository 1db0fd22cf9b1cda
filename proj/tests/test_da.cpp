#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "epirisk/da.hpp"
#include "epirisk/kmc.hpp"
#include "epirisk/network.hpp"
#include "epirisk/schedule.hpp"

using namespace epirisk;

namespace {

double row_mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

double row_var(const std::vector<double>& v) {
  const double m = row_mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return acc / (v.size() - 1);
}

// build a ready-to-update ensemble over a toy network plus a flat trajectory
struct Fixture {
  ContactNetwork net;
  Ensemble ens;
  Trajectory traj;

  explicit Fixture(int n, int m, std::uint64_t seed = 5) : net(generate_static_network(n, seed)) {
    std::vector<int> users(n);
    for (int k = 0; k < n; ++k) users[k] = k;
    Rng rng(seed + 1);
    ens = init_ensemble(net, users, PriorSpec{}, m, rng);
    // perturb states so covariances are informative
    std::mt19937_64 gen(seed + 2);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (auto& st : ens.states)
      for (int k = 0; k < n; ++k) {
        st.i[k] = 0.3 * uni(gen);
        st.e[k] = 0.2 * uni(gen);
        st.s[k] = 1.0 - st.i[k] - st.e[k];
      }
    traj.times = {0.0, 1.0};
    traj.snapshots = {ens.states, ens.states};
  }
};

ObservationRecord test_obs(int node, double value, double error, double t = 1.0) {
  ObservationRecord r;
  r.node = node;
  r.time = t;
  r.kind = ObsKind::TestPositive;
  r.observed_value = value;
  r.error_rate = error;
  return r;
}

}  // namespace

TEST_CASE("prior sampling matches the stated distributions") {
  ContactNetwork net = generate_static_network(1000, 3);
  std::vector<int> users(1000);
  for (int k = 0; k < 1000; ++k) users[k] = k;
  Rng rng(17);
  Ensemble ens = init_ensemble(net, users, PriorSpec{}, 100, rng);

  double latent_acc = 0.0, beta_min = 1e9, beta_max = -1e9;
  long count = 0;
  for (const MemberParams& pr : ens.params) {
    for (int k = 0; k < 1000; ++k) {
      latent_acc += 1.0 / pr.sigma[k];
      beta_min = std::min(beta_min, pr.beta[k]);
      beta_max = std::max(beta_max, pr.beta[k]);
      ++count;
    }
  }
  CHECK(beta_min >= 1.0);
  CHECK(beta_max <= 20.0);
  // latent period mean 1 + 1.35 * 2 = 3.7 days; sd of the gamma is ~2.3 days
  const double mc_tol = 3.0 * 2.33 / std::sqrt(static_cast<double>(count));
  CHECK(std::abs(latent_acc / count - 3.7) < mc_tol);
}

TEST_CASE("beta prior on the initial infectious fraction has mean ~0.16%") {
  Rng rng(23);
  double acc = 0.0;
  const int n = 100000;
  for (int k = 0; k < n; ++k) acc += sample_beta(0.0016, 1.0, rng);
  // mean alpha/(alpha+beta), sd of the mean from the beta variance
  const double mean = 0.0016 / 1.0016;
  const double sd = std::sqrt(mean * (1.0 - mean) / 2.0016 / n);
  CHECK(std::abs(acc / n - mean) < 4.0 * sd);
}

TEST_CASE("scalar EAKF matches the conjugate-Gaussian posterior to 1e-10") {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> normal(0.4, 0.15);
  std::vector<double> x(200);
  for (double& v : x) v = normal(gen);
  const double prior_mean = row_mean(x), prior_var = row_var(x);
  const double y = 0.9, r = 0.02;

  eakf_scalar_update(x, y, r, 0.0);

  const double post_var = 1.0 / (1.0 / prior_var + 1.0 / r);
  const double post_mean = post_var * (prior_mean / prior_var + y / r);
  CHECK(std::abs(row_mean(x) - post_mean) < 1e-10);
  CHECK(std::abs(row_var(x) - post_var) < 1e-10);
}

TEST_CASE("scalar EAKF limits") {
  SUBCASE("zero spread without regularization: no update") {
    std::vector<double> x(50, 0.37);
    eakf_scalar_update(x, 0.9, 0.01, 0.0);
    for (double v : x) CHECK(v == 0.37);
  }
  SUBCASE("zero observation variance: posterior collapses onto the datum") {
    std::vector<double> x = {0.1, 0.3, 0.5, 0.7};
    eakf_scalar_update(x, 0.42, 0.0, 0.0);
    for (double v : x) CHECK(v == doctest::Approx(0.42).epsilon(1e-14));
  }
}

TEST_CASE("regularized covariance has the required eigenvalue floor") {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd a(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) a(i, j) = normal(gen);
  Eigen::MatrixXd sigma = a * a.transpose();  // SPD-ish, possibly near-singular

  const double delta = 0.05, delta_min = 0.3;
  const Eigen::MatrixXd reg = regularize_covariance(sigma, delta, delta_min);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_orig(sigma, Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_reg(reg, Eigen::EigenvaluesOnly);
  const double floor = std::max(
      delta * (es_orig.eigenvalues().maxCoeff() - es_orig.eigenvalues().minCoeff()), delta_min);
  CHECK(es_reg.eigenvalues().minCoeff() >= es_orig.eigenvalues().minCoeff() + floor - 1e-9);
  CHECK(es_reg.eigenvalues().minCoeff() >= floor - 1e-9);
  CHECK(reg.isApprox(reg.transpose()));
}

TEST_CASE("localization: a node without observations is untouched by the update stage") {
  Fixture fx(120, 24);
  const MemberState before0 = fx.ens.states[0];
  const ArrayXd before_beta = fx.ens.params[0].beta;

  std::vector<ObservationRecord> obs = {test_obs(7, 0.8, 0.2)};
  eakf_update(fx.ens, fx.traj, 0.0, obs, Fidelity::Medium, DAConfig{}, PriorSpec{});

  for (int node = 0; node < 120; ++node) {
    if (node == 7) continue;
    CHECK(fx.ens.states[0].i[node] == before0.i[node]);
    CHECK(fx.ens.states[0].s[node] == before0.s[node]);
    CHECK(fx.ens.params[0].beta[node] == before_beta[node]);
  }
  // the observed node did move
  CHECK(fx.ens.states[0].i[7] != before0.i[7]);
}

TEST_CASE("updates at distinct nodes commute") {
  Fixture fx1(120, 16), fx2(120, 16);
  std::vector<ObservationRecord> fwd = {test_obs(3, 0.7, 0.25), test_obs(19, 0.6, 0.25)};
  std::vector<ObservationRecord> rev = {fwd[1], fwd[0]};
  eakf_update(fx1.ens, fx1.traj, 0.0, fwd, Fidelity::Medium, DAConfig{}, PriorSpec{});
  eakf_update(fx2.ens, fx2.traj, 0.0, rev, Fidelity::Medium, DAConfig{}, PriorSpec{});
  for (int m = 0; m < 16; ++m)
    for (int node : {3, 19}) {
      CHECK(fx1.ens.states[m].i[node] == fx2.ens.states[m].i[node]);
      CHECK(fx1.ens.params[m].beta[node] == fx2.ens.params[m].beta[node]);
    }
}

TEST_CASE("status pass only moves the SEIR states") {
  Fixture fx(120, 12);
  for (auto& st : fx.ens.states) {
    st.h = 0.5 * st.i;  // member-correlated hospitalization mass
    st.d.setConstant(0.02);
  }
  // refresh trajectory to include the H/D mass
  fx.traj.snapshots = {fx.ens.states, fx.ens.states};
  const MemberState before0 = fx.ens.states[0];
  const ArrayXd before_beta = fx.ens.params[0].beta;

  ObservationRecord hosp;
  hosp.node = 4;
  hosp.time = 1.0;
  hosp.kind = ObsKind::Hospitalized;
  hosp.observed_value = 1.0;
  hosp.error_rate = 0.0;
  eakf_update(fx.ens, fx.traj, 0.0, {hosp}, Fidelity::High, DAConfig{}, PriorSpec{});

  CHECK(fx.ens.states[0].h[4] == before0.h[4]);  // H probability itself is not updated
  CHECK(fx.ens.states[0].d[4] == before0.d[4]);
  CHECK(fx.ens.params[0].beta[4] == before_beta[4]);
  bool seir_moved = false;
  for (int m = 0; m < 12; ++m)
    seir_moved = seir_moved || fx.ens.states[m].i[4] != fx.traj.snapshots[0][m].i[4];
  CHECK(seir_moved);
}

TEST_CASE("conservation pseudo-observation pulls probability sums toward one") {
  Fixture fx(120, 16);
  // break the sums deliberately
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> uni(-0.15, 0.15);
  for (auto& st : fx.ens.states)
    for (int k = 0; k < 120; ++k) st.e[k] = std::clamp(st.e[k] + uni(gen), 0.0, 1.0);
  fx.traj.snapshots = {fx.ens.states, fx.ens.states};

  auto mean_sum_err = [&]() {
    double acc = 0.0;
    for (const auto& st : fx.ens.states)
      for (int k = 0; k < 120; ++k)
        acc += std::abs(st.s[k] + st.e[k] + st.i[k] + st.h[k] + st.r[k] + st.d[k] - 1.0);
    return acc / (120.0 * fx.ens.size());
  };

  const double before = mean_sum_err();
  std::vector<ObservationRecord> obs;
  for (int node = 0; node < 120; ++node) obs.push_back(test_obs(node, 0.3, 0.3));
  eakf_update(fx.ens, fx.traj, 0.0, obs, Fidelity::Medium, DAConfig{}, PriorSpec{});
  CHECK(mean_sum_err() < before);
}

TEST_CASE("inflation") {
  Fixture fx(120, 30);

  SUBCASE("a = 1, b = 0 is the identity") {
    const auto before = fx.ens.states;
    Rng rng(1);
    inflate(fx.ens, 1.0, 0.0, rng);
    for (int m = 0; m < 30; ++m)
      for (int k = 0; k < 20; ++k) CHECK(fx.ens.states[m].i[k] == before[m].i[k]);
  }

  SUBCASE("a = 3, b = 0 scales the variance ninefold and keeps the mean") {
    // keep values interior so clipping does not engage
    for (int m = 0; m < 30; ++m)
      fx.ens.states[m].i.setConstant(0.5 + 0.02 * (m - 15) / 15.0);
    std::vector<double> pre(30);
    for (int m = 0; m < 30; ++m) pre[m] = fx.ens.states[m].i[3];
    Rng rng(2);
    inflate(fx.ens, 3.0, 0.0, rng);
    std::vector<double> post(30);
    for (int m = 0; m < 30; ++m) post[m] = fx.ens.states[m].i[3];
    CHECK(row_mean(post) == doctest::Approx(row_mean(pre)).epsilon(1e-12));
    CHECK(row_var(post) == doctest::Approx(9.0 * row_var(pre)).epsilon(1e-9));
  }

  SUBCASE("defaults keep probabilities inside [0,1]") {
    Rng rng(3);
    inflate(fx.ens, 3.0, 0.1, rng);
    for (const auto& st : fx.ens.states) {
      CHECK(st.i.minCoeff() >= 0.0);
      CHECK(st.i.maxCoeff() <= 1.0);
    }
  }

  SUBCASE("invalid factors are rejected") {
    Rng rng(4);
    CHECK_THROWS_AS(inflate(fx.ens, 0.5, 0.0, rng), std::invalid_argument);
  }
}

TEST_CASE("cycle without observations reduces to a pure forecast") {
  ContactNetwork net = generate_static_network(120, 19);
  std::vector<int> users(120);
  for (int k = 0; k < 120; ++k) users[k] = k;
  Rng rng(29);
  Ensemble ens = init_ensemble(net, users, PriorSpec{}, 8, rng);
  for (auto& st : ens.states) {
    st.i.setConstant(0.02);
    st.s = 1.0 - st.i;
  }
  Ensemble reference = ens;

  Rng srng(31);
  DaySchedule sched = sample_day_schedule(net, 0, srng);
  ModelDay md = build_model_day(net, sched, ens.model);
  std::vector<ModelDay> window = {md};

  DAConfig cfg;
  cfg.ensemble_size = 8;
  cfg.inflate_states = false;  // isolate the forecast path
  Trajectory traj;
  Rng inflate_rng(1);
  da_cycle(ens, window, 0.0, {}, cfg, PriorSpec{}, IntegratorConfig{}, inflate_rng, traj);

  integrate(reference, window, 0.0, 1.0);
  for (int m = 0; m < 8; ++m)
    for (int k = 0; k < 120; ++k) {
      CHECK(ens.states[m].i[k] == reference.states[m].i[k]);
      CHECK(ens.params[m].beta[k] == reference.params[m].beta[k]);
    }
}

TEST_CASE("cycle without data leaves parameters at the prior even with inflation") {
  ContactNetwork net = generate_static_network(120, 37);
  std::vector<int> users(120);
  for (int k = 0; k < 120; ++k) users[k] = k;
  Rng rng(41);
  Ensemble ens = init_ensemble(net, users, PriorSpec{}, 8, rng);
  const auto prior_params = ens.params;

  Rng srng(43);
  DaySchedule sched = sample_day_schedule(net, 0, srng);
  std::vector<ModelDay> window = {build_model_day(net, sched, ens.model)};
  DAConfig cfg;
  cfg.ensemble_size = 8;
  Trajectory traj;
  Rng inflate_rng(2);
  da_cycle(ens, window, 0.0, {}, cfg, PriorSpec{}, IntegratorConfig{}, inflate_rng, traj);

  for (int m = 0; m < 8; ++m)
    for (int k = 0; k < 120; ++k) CHECK(ens.params[m].beta[k] == prior_params[m].beta[k]);
}

TEST_CASE("twin experiment: assimilation beats the blind forecast on Brier score") {
  // shared truth world; the DA run assimilates near-perfect daily tests of
  // every node, the control just forecasts from the same prior
  const int n = 200, m = 20, days = 14, spinup = 3;
  ContactNetwork net = generate_static_network(n, 51);
  Rng world_rng(53), sched_rng(55), ens_rng(57), obs_rng(59), inflate_rng(61);
  WorldParams wp;
  WorldState world = init_world(net, 0.05, wp, world_rng);

  std::vector<int> users(n);
  for (int k = 0; k < n; ++k) users[k] = k;
  Ensemble da_ens = init_ensemble(net, users, PriorSpec{}, m, ens_rng);
  Ensemble blind = da_ens;

  const AssaySpec sharp{0.999, 0.999};
  DAConfig cfg;
  cfg.ensemble_size = m;
  cfg.spinup_days = spinup;

  double brier_da = 0.0, brier_blind = 0.0;
  long scored = 0;
  Trajectory traj;

  for (int day = 0; day < days; ++day) {
    DaySchedule sched = sample_day_schedule(net, day, sched_rng);
    advance_world_day(world, net, sched, world_rng, nullptr);
    std::vector<ModelDay> window = {build_model_day(net, sched, da_ens.model)};

    if (day < spinup) {
      integrate(da_ens, window, day, day + 1.0, IntegratorConfig{}, &traj);
      integrate(blind, window, day, day + 1.0, IntegratorConfig{});
      continue;
    }

    const double prevalence = estimate_prevalence(da_ens);
    auto obs = administer_tests(world, users, n, sharp, prevalence, day + 1.0, obs_rng);
    auto status = status_observations(world, users, day + 1.0);
    obs.insert(obs.end(), status.begin(), status.end());

    da_cycle(da_ens, window, day, obs, cfg, PriorSpec{}, IntegratorConfig{}, inflate_rng, traj);
    integrate(blind, window, day, day + 1.0, IntegratorConfig{});

    for (int k = 0; k < n; ++k) {
      const double truth = world.health[k] == Health::I ? 1.0 : 0.0;
      double da_i = 0.0, blind_i = 0.0;
      for (int mm = 0; mm < m; ++mm) {
        da_i += da_ens.states[mm].i[k];
        blind_i += blind.states[mm].i[k];
      }
      brier_da += std::pow(da_i / m - truth, 2);
      brier_blind += std::pow(blind_i / m - truth, 2);
      ++scored;
    }
  }
  brier_da /= scored;
  brier_blind /= scored;
  MESSAGE("Brier with DA: ", brier_da, "  blind forecast: ", brier_blind);
  CHECK(brier_da < brier_blind);
}

TEST_CASE("full observation keeps parameter spread within the prior spread") {
  Fixture fx(120, 24);
  std::vector<double> prior_spread(120);
  for (int k = 0; k < 120; ++k) {
    std::vector<double> betas(24);
    for (int m = 0; m < 24; ++m) betas[m] = fx.ens.params[m].beta[k];
    prior_spread[k] = std::sqrt(row_var(betas));
  }
  std::vector<ObservationRecord> obs;
  for (int node = 0; node < 120; ++node) obs.push_back(test_obs(node, 0.6, 0.2));
  eakf_update(fx.ens, fx.traj, 0.0, obs, Fidelity::Medium, DAConfig{}, PriorSpec{});
  for (int k = 0; k < 120; ++k) {
    std::vector<double> betas(24);
    for (int m = 0; m < 24; ++m) betas[m] = fx.ens.params[m].beta[k];
    CHECK(std::sqrt(row_var(betas)) <= prior_spread[k] + 1e-9);
    // and the posterior stays inside the truncated support
    for (double b : betas) {
      CHECK(b >= 1.0);
      CHECK(b <= 20.0);
    }
  }
}

TEST_CASE("non-finite ensembles abort the cycle with diagnostics") {
  Fixture fx(120, 8);
  fx.ens.states[0].i[2] = std::numeric_limits<double>::quiet_NaN();
  fx.traj.snapshots = {fx.ens.states, fx.ens.states};
  std::vector<ObservationRecord> obs = {test_obs(2, 0.5, 0.2)};
  CHECK_THROWS_AS(
      eakf_update(fx.ens, fx.traj, 0.0, obs, Fidelity::Medium, DAConfig{}, PriorSpec{}),
      std::runtime_error);
}
