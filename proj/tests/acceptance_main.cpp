// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// mandatory criterion fails. The full-scale reproduction targets are gated
// behind --full-scale. Use --only N to run a single criterion while tuning.

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "epirisk/classify.hpp"
#include "epirisk/da.hpp"
#include "epirisk/io.hpp"
#include "epirisk/kmc.hpp"
#include "epirisk/network.hpp"
#include "epirisk/scenario.hpp"
#include "epirisk/schedule.hpp"
#include "epirisk/userbase.hpp"

using namespace epirisk;

namespace {

int g_failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

void report_skip(int id, const char* name, const char* why) {
  std::printf("[SKIP] criterion %d: %s (%s)\n", id, name, why);
  std::fflush(stdout);
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

// ---------------------------------------------------------------- criterion 1
void criterion_conservation() {
  ContactNetwork net = generate_static_network(5000, derive_seed(11, stream::network));
  std::vector<int> users(net.n_nodes());
  for (int k = 0; k < net.n_nodes(); ++k) users[k] = k;
  Rng ens_rng = make_rng(11, stream::ensemble, 0);
  Ensemble ens = init_ensemble(net, users, PriorSpec{}, 20, ens_rng);

  for (int day = 0; day < 30; ++day) {
    Rng sched_rng = make_rng(11, stream::schedule, day);
    DaySchedule sched = sample_day_schedule(net, day, sched_rng);
    std::vector<ModelDay> window = {build_model_day(net, sched, ens.model)};
    integrate(ens, window, day, day + 1.0);
  }

  double worst = 0.0;
  for (const MemberState& st : ens.states)
    for (int k = 0; k < ens.model.n; ++k)
      worst = std::max(worst, std::abs(st.s[k] + st.e[k] + st.i[k] + st.h[k] + st.r[k] +
                                       st.d[k] - 1.0));
  report(1, "probability conservation over a 30-day forecast", worst <= 1e-6,
         fmt("max per-node |sum-1| = %.3e, tolerance 1e-6, 5000 nodes, M=20", worst));
}

// ---------------------------------------------------------------- criterion 2
double ks_distance(std::vector<double>& samples, double rate) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const double f = 1.0 - std::exp(-rate * samples[k]);
    d = std::max(d, std::abs((k + 1) / n - f));
    d = std::max(d, std::abs(k / n - f));
  }
  return d;
}

void criterion_gillespie() {
  const int n = 10000;
  const double crit = 1.628 / std::sqrt(static_cast<double>(n));  // KS, alpha = 0.01
  ContactNetwork net = make_empty_network(n);
  Rng rng(21);

  auto waiting_times = [&](Health start, double horizon, bool transfer) {
    WorldParams params;
    params.hospital_transfer = transfer;
    WorldState w = init_world(net, 0.0, params, rng);
    for (int k = 0; k < n; ++k) force_state(w, k, start, rng);
    std::vector<DaySchedule> scheds(static_cast<std::size_t>(horizon));
    for (std::size_t d = 0; d < scheds.size(); ++d) scheds[d].day = static_cast<int>(d);
    EventLog log = run_kmc(w, net, scheds, horizon, rng);
    std::vector<double> times;
    for (const EventRecord& e : log)
      if (e.from == start) times.push_back(e.t);
    return times;
  };

  auto t_ei = waiting_times(Health::E, 80.0, true);
  auto t_i = waiting_times(Health::I, 80.0, true);
  auto t_h = waiting_times(Health::H, 120.0, false);
  const double d_ei = ks_distance(t_ei, 1.0 / 3.7);
  const double d_i = ks_distance(t_i, 1.0 / 3.2);
  const double d_h = ks_distance(t_h, 1.0 / 5.0);
  const bool pass = t_ei.size() == n && t_i.size() == n && t_h.size() == n && d_ei < crit &&
                    d_i < crit && d_h < crit;
  report(2, "Gillespie waiting-time distributions", pass,
         fmt("KS distances E->I %.4f, I->exit %.4f, H->exit %.4f vs critical %.4f (n=1e4)",
             d_ei, d_i, d_h, crit));
}

// ---------------------------------------------------------------- criterion 3
void criterion_edge_process() {
  NodeMeta a, b;
  a.id = 0;
  b.id = 1;
  a.lambda_min = a.lambda_max = b.lambda_min = b.lambda_max = 4.0;  // constant rate
  const double abar = 0.4, mu = kDeactivationRate;
  const double pi_active = abar / (mu + abar);

  Rng rng(31);
  const int n_days = 100000;
  double active_time = 0.0;
  for (int day = 0; day < n_days; ++day)
    for (const Interval& iv : sample_edge_intervals(a, b, 10.0, 0.0, rng))
      active_time += iv.end - iv.begin;
  const double fraction = active_time / n_days;
  const double sigma = std::sqrt(2.0 * pi_active * (1.0 - pi_active) / ((abar + mu) * n_days));
  const bool stat_ok = std::abs(fraction - pi_active) < 3.0 * sigma + pi_active / (abar + mu);

  const double khat_abar = 10.0 * day_average_rate(4.0, 84.0, 10.0);
  const bool quad_ok = std::abs(khat_abar - 37.7) / 37.7 < 0.01;

  report(3, "edge birth-death stationarity and 37.7/day quadrature", stat_ok && quad_ok,
         fmt("active fraction %.3e vs %.3e (3sigma %.2e); khat*Abar = %.4f", fraction,
             pi_active, 3.0 * sigma, khat_abar));
}

// ---------------------------------------------------------------- criterion 4
void criterion_ppv_for() {
  const AssaySpec assay{0.8, 0.99};
  const double p1 = ppv(assay, 0.01);
  const double f1 = for_rate(assay, 0.01);
  const bool pass = std::abs(p1 - 0.44692737430167595) < 1e-6 &&
                    std::abs(f1 - 2.0364525e-3) < 1e-6 && ppv(assay, 1.0) == 1.0 &&
                    ppv({0.8, 1.0}, 0.4) == 1.0 && for_rate({1.0, 0.99}, 0.4) == 0.0;
  report(4, "PPV/FOR hand-derived values", pass,
         fmt("PPV(0.8,0.99,1%%) = %.8f, FOR = %.6e, tolerance 1e-6", p1, f1));
}

// ---------------------------------------------------------------- criterion 5
void criterion_eakf() {
  // scalar conjugate-Gaussian oracle
  std::mt19937_64 gen(41);
  std::normal_distribution<double> normal(0.4, 0.15);
  std::vector<double> x(400);
  for (double& v : x) v = normal(gen);
  double mean0 = 0.0;
  for (double v : x) mean0 += v;
  mean0 /= x.size();
  double var0 = 0.0;
  for (double v : x) var0 += (v - mean0) * (v - mean0);
  var0 /= (x.size() - 1);
  const double y = 0.9, r = 0.02;
  eakf_scalar_update(x, y, r, 0.0);
  double mean1 = 0.0;
  for (double v : x) mean1 += v;
  mean1 /= x.size();
  double var1 = 0.0;
  for (double v : x) var1 += (v - mean1) * (v - mean1);
  var1 /= (x.size() - 1);
  const double post_var = 1.0 / (1.0 / var0 + 1.0 / r);
  const double post_mean = post_var * (mean0 / var0 + y / r);
  const bool oracle_ok = std::abs(mean1 - post_mean) < 1e-10 && std::abs(var1 - post_var) < 1e-10;

  // limits
  std::vector<double> flat(64, 0.37);
  eakf_scalar_update(flat, 0.9, 0.01, 0.0);
  bool limits_ok = flat[0] == 0.37;
  std::vector<double> sharp = {0.1, 0.4, 0.7};
  eakf_scalar_update(sharp, 0.42, 0.0, 0.0);
  for (double v : sharp) limits_ok = limits_ok && std::abs(v - 0.42) < 1e-14;

  // localization: unobserved node untouched by the update stage
  ContactNetwork net = generate_static_network(200, 43);
  std::vector<int> users(200);
  for (int k = 0; k < 200; ++k) users[k] = k;
  Rng ens_rng(45);
  Ensemble ens = init_ensemble(net, users, PriorSpec{}, 16, ens_rng);
  std::mt19937_64 gen2(47);
  std::uniform_real_distribution<double> uni(0.0, 0.3);
  for (auto& st : ens.states)
    for (int k = 0; k < 200; ++k) {
      st.i[k] = uni(gen2);
      st.s[k] = 1.0 - st.i[k];
    }
  Trajectory traj;
  traj.times = {0.0, 1.0};
  traj.snapshots = {ens.states, ens.states};
  const MemberState before = ens.states[3];
  ObservationRecord obs;
  obs.node = 17;
  obs.time = 1.0;
  obs.kind = ObsKind::TestPositive;
  obs.observed_value = 0.8;
  obs.error_rate = 0.2;
  eakf_update(ens, traj, 0.0, {obs}, Fidelity::Medium, DAConfig{}, PriorSpec{});
  bool local_ok = ens.states[3].i[17] != before.i[17];
  for (int k = 0; k < 200 && local_ok; ++k) {
    if (k == 17) continue;
    local_ok = ens.states[3].i[k] == before.i[k] && ens.states[3].s[k] == before.s[k];
  }

  // regularized covariance eigenvalue floor
  Eigen::MatrixXd m(5, 5);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) m(i, j) = nd(gen);
  Eigen::MatrixXd sigma = m * m.transpose();
  const double delta = 0.25, delta_min = 0.05;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es0(sigma, Eigen::EigenvaluesOnly);
  const double floor =
      std::max(delta * (es0.eigenvalues().maxCoeff() - es0.eigenvalues().minCoeff()), delta_min);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es1(
      regularize_covariance(sigma, delta, delta_min), Eigen::EigenvaluesOnly);
  const bool reg_ok = es1.eigenvalues().minCoeff() >= floor - 1e-9;

  report(5, "EAKF oracle, limits, localization, covariance floor",
         oracle_ok && limits_ok && local_ok && reg_ok,
         fmt("oracle %s, limits %s, localization %s, eigen floor %s (min eig %.4f >= %.4f)",
             oracle_ok ? "ok" : "BAD", limits_ok ? "ok" : "BAD", local_ok ? "ok" : "BAD",
             reg_ok ? "ok" : "BAD", es1.eigenvalues().minCoeff(), floor));
}

// ---------------------------------------------------------------- criterion 6
void criterion_closure() {
  // identical members
  MemberState st = MemberState::zero(2);
  st.s[0] = 0.4;
  st.s[1] = 0.6;
  st.i[0] = 0.3;
  st.i[1] = 0.1;
  std::vector<MemberState> members = {st, st, st, st};
  std::vector<ActiveEdge> probe(1);
  probe[0].a = 0;
  probe[0].b = 1;
  probe[0].w = 1.0;
  compute_closure(members, probe);
  const bool ident_ok = std::abs(probe[0].c_si_ab - 1.0) < 1e-14 &&
                        std::abs(probe[0].c_si_ba - 1.0) < 1e-14;

  // late-epidemic histogram from a desk-scale forecast ensemble (the setting
  // in which the closure is verified against the stochastic simulation)
  const std::uint64_t seed = 61;
  ContactNetwork net = generate_static_network(1500, derive_seed(seed, stream::network));
  std::vector<int> users(net.n_nodes());
  for (int k = 0; k < net.n_nodes(); ++k) users[k] = k;
  Rng ens_rng = make_rng(seed, stream::ensemble, 0);
  Ensemble ens = init_ensemble(net, users, PriorSpec{}, 20, ens_rng);

  const int last_day = 49;  // well past the desk-scale epidemic peak (~day 30)
  ModelDay final_day;
  for (int day = 0; day <= last_day; ++day) {
    Rng sched_rng = make_rng(seed, stream::schedule, day);
    DaySchedule sched = sample_day_schedule(net, day, sched_rng);
    std::vector<ModelDay> window = {build_model_day(net, sched, ens.model)};
    integrate(ens, window, day, day + 1.0);
    if (day == last_day) final_day = std::move(window[0]);
  }

  // coefficients over a midday window on the final day
  std::vector<ActiveEdge> active;
  for (const ModelEdge& me : final_day.edges) {
    const double overlap = active_overlap(me.intervals, 0.45, 0.55);
    if (overlap <= 0.0) continue;
    ActiveEdge ae;
    ae.a = me.a;
    ae.b = me.b;
    ae.w = overlap / 0.1;
    ae.ward = me.ward;
    active.push_back(ae);
  }
  compute_closure(ens.states, active);
  long total = 0, near_one = 0;
  for (const ActiveEdge& ae : active) {
    for (double c : {ae.c_si_ab, ae.c_si_ba}) {
      ++total;
      near_one += c >= 0.8 && c <= 1.2;
    }
  }
  const double frac = total ? static_cast<double>(near_one) / total : 0.0;
  report(6, "closure coefficients: identity at zero spread, concentration near 1",
         ident_ok && total > 100 && frac >= 0.8,
         fmt("identical members %s; late-epidemic: %.1f%% of %ld coefficients in [0.8, 1.2]",
             ident_ok ? "ok" : "BAD", 100.0 * frac, total));
}

// ---------------------------------------------------------------- criterion 7
ScenarioConfig twin_config() {
  ScenarioConfig cfg;
  cfg.network_nodes = 5000;
  cfg.days = 46;
  cfg.initial_infectious_fraction = 0.0016;
  cfg.user_fraction = 1.0;
  cfg.test_budget_fraction = 0.25;
  cfg.da.ensemble_size = 20;
  cfg.da.spinup_days = 8;
  cfg.da.status_noise_std = 0.1;
  cfg.policy.kind = PolicyKind::None;
  cfg.roc_days = {30, 44};
  return cfg;
}

void criterion_twin() {
  const int replicas = 5;
  ScenarioConfig cfg = twin_config();

  struct DayEval {
    std::vector<RocPoint> curve;  // averaged pointwise over replicas
    double to_tpr = 0, to_ppf = 0, ct_tpr = 0, ct_ppf = 0;
  };
  std::vector<DayEval> evals(cfg.roc_days.size());

  for (int rep = 0; rep < replicas; ++rep) {
    const ReplicaResult res =
        run_scenario(cfg, 500, rep, "/tmp/epirisk_accept/twin_rep" + std::to_string(rep));
    for (std::size_t d = 0; d < res.evaluations.size(); ++d) {
      const auto& ev = res.evaluations[d];
      DayEval& acc = evals[d];
      if (acc.curve.empty()) acc.curve.resize(ev.da_curve.size());
      for (std::size_t k = 0; k < ev.da_curve.size(); ++k) {
        acc.curve[k].threshold = ev.da_curve[k].threshold;
        acc.curve[k].ppf += ev.da_curve[k].ppf / replicas;
        acc.curve[k].tpr += ev.da_curve[k].tpr / replicas;
      }
      acc.to_tpr += ev.test_only.tpr / replicas;
      acc.to_ppf += ev.test_only.ppf / replicas;
      acc.ct_tpr += ev.contact_tracing.tpr / replicas;
      acc.ct_ppf += ev.contact_tracing.ppf / replicas;
    }
  }

  bool pass = true;
  std::string detail;
  for (std::size_t d = 0; d < evals.size(); ++d) {
    const DayEval& ev = evals[d];
    // dominance at the baselines' operating points, clamped into [2%, 20%]
    const double to_at = std::clamp(ev.to_ppf, 0.02, 0.20);
    const double ct_at = std::clamp(ev.ct_ppf, 0.02, 0.20);
    const double da_vs_to = tpr_at_ppf(ev.curve, to_at);
    const double da_vs_ct = tpr_at_ppf(ev.curve, ct_at);
    const bool day_ok = da_vs_to > ev.to_tpr && da_vs_ct > ev.ct_tpr;
    pass = pass && day_ok;
    detail += fmt("day %d: DA %.3f vs test-only %.3f (ppf %.3f), DA %.3f vs tracing %.3f "
                  "(ppf %.3f); ",
                  cfg.roc_days[d], da_vs_to, ev.to_tpr, to_at, da_vs_ct, ev.ct_tpr, ct_at);
  }
  report(7, "twin experiment: DA dominates both baselines at matched PPF", pass, detail);
}

// ---------------------------------------------------------------- criterion 8
void criterion_interventions() {
  ScenarioConfig base_cfg;
  base_cfg.network_nodes = 5000;
  base_cfg.days = 90;
  base_cfg.initial_infectious_fraction = 0.0016;
  base_cfg.test_budget_fraction = 0.25;
  base_cfg.da.ensemble_size = 20;
  base_cfg.da.spinup_days = 8;

  auto mean_deaths = [](const ScenarioConfig& cfg, std::uint64_t seed, int reps,
                        const char* tag, std::vector<ReplicaResult>* out = nullptr) {
    double acc = 0.0;
    for (int rep = 0; rep < reps; ++rep) {
      ReplicaResult r = run_scenario(cfg, seed, rep,
                                     std::string("/tmp/epirisk_accept/") + tag +
                                         std::to_string(rep));
      acc += static_cast<double>(r.cum_deaths);
      if (out) out->push_back(std::move(r));
    }
    return acc / reps;
  };

  ScenarioConfig free_cfg = base_cfg;
  free_cfg.da_enabled = false;
  free_cfg.policy.kind = PolicyKind::None;
  const double deaths_free = mean_deaths(free_cfg, 800, 3, "free");

  ScenarioConfig lock_cfg = base_cfg;
  lock_cfg.da_enabled = false;
  lock_cfg.policy.kind = PolicyKind::Lockdown;
  lock_cfg.policy.start_day = 20;
  const double deaths_lock = mean_deaths(lock_cfg, 800, 3, "lock");

  ScenarioConfig iso_cfg = base_cfg;
  iso_cfg.policy.kind = PolicyKind::DaIsolation;
  iso_cfg.policy.start_day = 9;
  iso_cfg.policy.classification_threshold = 0.01;
  std::vector<ReplicaResult> iso_runs;
  const double deaths_iso = mean_deaths(iso_cfg, 800, 2, "iso", &iso_runs);

  double isolated_late = 0.0;
  long samples = 0;
  for (const ReplicaResult& r : iso_runs)
    for (int day = 30; day < 90; ++day) {
      isolated_late += r.isolated_fraction_by_day[day];
      ++samples;
    }
  isolated_late /= samples;

  const double reduction = 1.0 - deaths_lock / deaths_free;
  const bool lock_ok = reduction >= 0.40;
  const bool iso_ok = deaths_iso <= deaths_lock && isolated_late <= 0.15;
  report(8, "intervention direction: lockdown and DA isolation", lock_ok && iso_ok,
         fmt("deaths free %.1f, lockdown %.1f (reduction %.0f%%, need >= 40%%), DA isolation "
             "%.1f (<= lockdown), isolated fraction after transient %.3f (<= 0.15)",
             deaths_free, deaths_lock, 100.0 * reduction, deaths_iso, isolated_late));
}

// ---------------------------------------------------------------- criterion 9
void criterion_full_scale() {
  const int replicas = 20, days = 90, n = 97942;
  std::vector<double> daily_deaths(days, 0.0);
  double total_deaths = 0.0, total_infections = 0.0;
  for (int rep = 0; rep < replicas; ++rep) {
    ContactNetwork net = generate_static_network(n, derive_seed(900, stream::network));
    Rng world_rng = make_rng(900, stream::world, rep);
    WorldState world = init_world(net, 0.0016, WorldParams{}, world_rng);
    const int seeds = world.count(Health::I);
    for (int day = 0; day < days; ++day) {
      Rng sched_rng = make_rng(900, stream::schedule,
                               static_cast<std::uint64_t>(rep) * 1000003ull + day);
      DaySchedule sched = sample_day_schedule(net, day, sched_rng);
      const DayCounts counts = advance_world_day(world, net, sched, world_rng, nullptr);
      daily_deaths[day] += counts.new_deaths * (100000.0 / n) / replicas;
    }
    total_deaths += static_cast<double>(world.cum_deaths);
    total_infections += static_cast<double>(world.cum_infections) + seeds;
    std::printf("  full-scale replica %d: %lld deaths, %lld infections\n", rep,
                world.cum_deaths, world.cum_infections);
    std::fflush(stdout);
  }
  // 7-day moving average of the ensemble-mean daily death rate, as plotted
  double peak = 0.0;
  for (int day = 3; day < days - 3; ++day) {
    double avg = 0.0;
    for (int k = day - 3; k <= day + 3; ++k) avg += daily_deaths[k] / 7.0;
    peak = std::max(peak, avg);
  }
  const double ifr = total_deaths / total_infections;
  const bool peak_ok = peak >= 10.5 && peak <= 31.5;
  const bool ifr_ok = ifr >= 0.008 && ifr <= 0.014;
  report(9, "full-scale free-running epidemic anchors", peak_ok && ifr_ok,
         fmt("smoothed daily-death peak %.1f per 100k (band [10.5, 31.5]), IFR %.4f "
             "(band [0.008, 0.014])",
             peak, ifr));
}

// --------------------------------------------------------------- criterion 10
std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion_determinism() {
  ScenarioConfig cfg;
  cfg.network_nodes = 400;
  cfg.days = 14;
  cfg.initial_infectious_fraction = 0.01;
  cfg.test_budget_fraction = 0.25;
  cfg.da.ensemble_size = 8;
  cfg.da.spinup_days = 4;
  cfg.policy.kind = PolicyKind::DaIsolation;
  cfg.policy.start_day = 5;
  cfg.roc_days = {12};
  run_scenario(cfg, 123456, 0, "/tmp/epirisk_accept/det_a");
  run_scenario(cfg, 123456, 0, "/tmp/epirisk_accept/det_b");
  bool pass = true;
  std::string differing;
  for (const char* name : {"daily.csv", "observations.csv", "isolation_ledger.csv",
                           "da_diagnostics.csv", "roc.csv", "ensemble_means.csv",
                           "isolated_fraction.csv", "truth.csv", "manifest.json"}) {
    const std::string a = slurp(path_join("/tmp/epirisk_accept/det_a", name));
    const std::string b = slurp(path_join("/tmp/epirisk_accept/det_b", name));
    if (a.empty() || a != b) {
      pass = false;
      differing += std::string(name) + " ";
    }
  }
  report(10, "identical config and seed give byte-identical outputs", pass,
         pass ? "9 output files compared" : ("differs: " + differing));
}

}  // namespace

int main(int argc, char** argv) {
  bool full_scale = false;
  int only = 0;
  for (int k = 1; k < argc; ++k) {
    if (std::strcmp(argv[k], "--full-scale") == 0) full_scale = true;
    if (std::strcmp(argv[k], "--only") == 0 && k + 1 < argc) only = std::atoi(argv[k + 1]);
  }
  ensure_directory("/tmp/epirisk_accept");

  auto want = [&](int id) { return only == 0 || only == id; };
  if (want(1)) criterion_conservation();
  if (want(2)) criterion_gillespie();
  if (want(3)) criterion_edge_process();
  if (want(4)) criterion_ppv_for();
  if (want(5)) criterion_eakf();
  if (want(6)) criterion_closure();
  if (want(7)) criterion_twin();
  if (want(8)) criterion_interventions();
  if (want(9)) {
    if (full_scale)
      criterion_full_scale();
    else
      report_skip(9, "full-scale free-running epidemic anchors",
                  "optional; enable with --full-scale");
  }
  if (want(10)) criterion_determinism();

  std::printf("%s: %d criterion(s) failed\n", g_failures ? "FAILURE" : "SUCCESS", g_failures);
  return g_failures ? 1 : 0;
}
