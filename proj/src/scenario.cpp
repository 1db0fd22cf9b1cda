#include "epirisk/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

#include "epirisk/io.hpp"

namespace epirisk {

using nlohmann::json;

namespace {

UserBaseTopology topology_from_name(const std::string& s) {
  if (s == "neighbor") return UserBaseTopology::Neighbor;
  if (s == "random") return UserBaseTopology::Random;
  throw std::invalid_argument("config: unknown user base topology: " + s);
}

PolicyKind policy_from_name(const std::string& s) {
  if (s == "none") return PolicyKind::None;
  if (s == "lockdown") return PolicyKind::Lockdown;
  if (s == "tti") return PolicyKind::Tti;
  if (s == "da_isolation") return PolicyKind::DaIsolation;
  throw std::invalid_argument("config: unknown policy kind: " + s);
}

const char* policy_name(PolicyKind k) {
  switch (k) {
    case PolicyKind::None: return "none";
    case PolicyKind::Lockdown: return "lockdown";
    case PolicyKind::Tti: return "tti";
    case PolicyKind::DaIsolation: return "da_isolation";
  }
  return "none";
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ScenarioConfig ScenarioConfig::from_json_text(const std::string& text) {
  json j = json::parse(text);
  ScenarioConfig cfg;
  get_if(j, "version", cfg.version);
  if (cfg.version != 1)
    throw std::invalid_argument("config: unsupported version " + std::to_string(cfg.version));

  if (j.contains("network")) {
    const json& n = j["network"];
    get_if(n, "file", cfg.network_file);
    get_if(n, "nodes", cfg.network_nodes);
    get_if(n, "community_exponent", cfg.degree_params.community_exponent);
    get_if(n, "community_mean_degree", cfg.degree_params.community_mean_degree);
    get_if(n, "community_max_degree", cfg.degree_params.community_max_degree);
  }
  if (j.contains("run")) {
    const json& r = j["run"];
    get_if(r, "days", cfg.days);
    get_if(r, "initial_infectious_fraction", cfg.initial_infectious_fraction);
    get_if(r, "beta", cfg.world.beta);
    get_if(r, "sigma_inverse_days", cfg.world.sigma);
    if (r.contains("sigma_inverse_days")) cfg.world.sigma = 1.0 / r["sigma_inverse_days"].get<double>();
    if (r.contains("gamma_inverse_days")) cfg.world.gamma = 1.0 / r["gamma_inverse_days"].get<double>();
    if (r.contains("gamma_h_inverse_days"))
      cfg.world.gamma_h = 1.0 / r["gamma_h_inverse_days"].get<double>();
  }
  if (j.contains("user_base")) {
    const json& u = j["user_base"];
    get_if(u, "fraction", cfg.user_fraction);
    if (u.contains("topology")) cfg.user_topology = topology_from_name(u["topology"]);
  }
  if (j.contains("testing")) {
    const json& t = j["testing"];
    get_if(t, "budget_fraction", cfg.test_budget_fraction);
    get_if(t, "sensitivity", cfg.test_assay.sensitivity);
    get_if(t, "specificity", cfg.test_assay.specificity);
  }
  if (j.contains("sensors")) {
    const json& s = j["sensors"];
    get_if(s, "enabled", cfg.sensors_enabled);
    get_if(s, "participation", cfg.sensor_participation);
    get_if(s, "sensitivity", cfg.sensor_assay.sensitivity);
    get_if(s, "specificity", cfg.sensor_assay.specificity);
  }
  if (j.contains("da")) {
    const json& d = j["da"];
    get_if(d, "enabled", cfg.da_enabled);
    get_if(d, "ensemble_size", cfg.da.ensemble_size);
    get_if(d, "window_days", cfg.da.window_days);
    get_if(d, "spinup_days", cfg.da.spinup_days);
    get_if(d, "delta_tests", cfg.da.delta_tests);
    get_if(d, "delta_status", cfg.da.delta_status);
    get_if(d, "inflation_a", cfg.da.inflation_a);
    get_if(d, "inflation_b", cfg.da.inflation_b);
    get_if(d, "conservation_noise_std", cfg.da.conservation_noise_std);
    get_if(d, "status_noise_std", cfg.da.status_noise_std);
    get_if(d, "inflate_states", cfg.da.inflate_states);
    if (d.contains("inflation_stage")) {
      const std::string stage = d["inflation_stage"].get<std::string>();
      if (stage == "cycle_start")
        cfg.da.inflation_stage = InflationStage::CycleStart;
      else if (stage == "before_final_pass")
        cfg.da.inflation_stage = InflationStage::BeforeFinalPass;
      else
        throw std::invalid_argument("config: unknown da.inflation_stage: " + stage);
    }
  }
  if (j.contains("priors")) {
    const json& p = j["priors"];
    get_if(p, "beta_mean", cfg.prior.beta_mean);
    get_if(p, "beta_sd", cfg.prior.beta_sd);
    get_if(p, "beta_lo", cfg.prior.beta_lo);
    get_if(p, "beta_hi", cfg.prior.beta_hi);
    get_if(p, "initial_alpha", cfg.prior.initial_alpha);
    get_if(p, "initial_beta", cfg.prior.initial_beta);
  }
  if (j.contains("policy")) {
    const json& p = j["policy"];
    if (p.contains("kind")) cfg.policy.kind = policy_from_name(p["kind"]);
    get_if(p, "start_day", cfg.policy.start_day);
    get_if(p, "lockdown_lambda_max", cfg.policy.lockdown_lambda_max);
    get_if(p, "isolation_lambda", cfg.policy.isolation_lambda);
    get_if(p, "tti_isolation_days", cfg.policy.tti_isolation_days);
    get_if(p, "release_negative_days", cfg.policy.release_negative_days);
    get_if(p, "classification_threshold", cfg.policy.classification_threshold);
  }
  if (j.contains("output")) {
    const json& o = j["output"];
    if (o.contains("roc_days")) cfg.roc_days = o["roc_days"].get<std::vector<int>>();
    if (o.contains("roc_thresholds"))
      cfg.roc_thresholds = o["roc_thresholds"].get<std::vector<double>>();
    get_if(o, "export_events", cfg.export_events);
    get_if(o, "export_schedules", cfg.export_schedules);
    get_if(o, "nyc_reference", cfg.nyc_reference_file);
  }
  cfg.validate();
  return cfg;
}

ScenarioConfig ScenarioConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::string ScenarioConfig::to_json_text() const {
  json j;
  j["version"] = version;
  j["network"] = {{"file", network_file},
                  {"nodes", network_nodes},
                  {"community_exponent", degree_params.community_exponent},
                  {"community_mean_degree", degree_params.community_mean_degree},
                  {"community_max_degree", degree_params.community_max_degree}};
  j["run"] = {{"days", days},
              {"initial_infectious_fraction", initial_infectious_fraction},
              {"beta", world.beta},
              {"sigma_inverse_days", 1.0 / world.sigma},
              {"gamma_inverse_days", 1.0 / world.gamma},
              {"gamma_h_inverse_days", 1.0 / world.gamma_h}};
  j["user_base"] = {{"fraction", user_fraction},
                    {"topology", user_topology == UserBaseTopology::Neighbor ? "neighbor"
                                                                             : "random"}};
  j["testing"] = {{"budget_fraction", test_budget_fraction},
                  {"sensitivity", test_assay.sensitivity},
                  {"specificity", test_assay.specificity}};
  j["sensors"] = {{"enabled", sensors_enabled},
                  {"participation", sensor_participation},
                  {"sensitivity", sensor_assay.sensitivity},
                  {"specificity", sensor_assay.specificity}};
  j["da"] = {{"enabled", da_enabled},
             {"ensemble_size", da.ensemble_size},
             {"window_days", da.window_days},
             {"spinup_days", da.spinup_days},
             {"delta_tests", da.delta_tests},
             {"delta_status", da.delta_status},
             {"inflation_a", da.inflation_a},
             {"inflation_b", da.inflation_b},
             {"conservation_noise_std", da.conservation_noise_std},
             {"status_noise_std", da.status_noise_std},
             {"inflate_states", da.inflate_states},
             {"inflation_stage", da.inflation_stage == InflationStage::CycleStart
                                     ? "cycle_start"
                                     : "before_final_pass"}};
  j["policy"] = {{"kind", policy_name(policy.kind)},
                 {"start_day", policy.start_day},
                 {"lockdown_lambda_max", policy.lockdown_lambda_max},
                 {"isolation_lambda", policy.isolation_lambda},
                 {"tti_isolation_days", policy.tti_isolation_days},
                 {"release_negative_days", policy.release_negative_days},
                 {"classification_threshold", policy.classification_threshold}};
  j["output"] = {{"roc_days", roc_days},
                 {"roc_thresholds", roc_thresholds},
                 {"export_events", export_events},
                 {"export_schedules", export_schedules},
                 {"nyc_reference", nyc_reference_file}};
  return j.dump(2);
}

void ScenarioConfig::validate() const {
  if (network_file.empty() && network_nodes < 100)
    throw std::invalid_argument("config: network.nodes must be >= 100");
  if (days <= 0) throw std::invalid_argument("config: run.days must be positive");
  if (initial_infectious_fraction < 0.0 || initial_infectious_fraction > 1.0)
    throw std::invalid_argument("config: run.initial_infectious_fraction outside [0,1]");
  if (user_fraction <= 0.0 || user_fraction > 1.0)
    throw std::invalid_argument("config: user_base.fraction outside (0,1]");
  if (test_budget_fraction < 0.0 || test_budget_fraction > 1.0)
    throw std::invalid_argument("config: testing.budget_fraction outside [0,1]");
  if (da_enabled && da.ensemble_size < 2)
    throw std::invalid_argument("config: da.ensemble_size must be >= 2");
  if (da.window_days <= 0.0) throw std::invalid_argument("config: da.window_days must be > 0");
  if (policy.kind == PolicyKind::DaIsolation && !da_enabled)
    throw std::invalid_argument("config: da_isolation policy requires da.enabled");
  if (policy.classification_threshold < 0.0 || policy.classification_threshold > 1.0)
    throw std::invalid_argument("config: policy.classification_threshold outside [0,1]");
}

void write_manifest(const ScenarioConfig& cfg, std::uint64_t master_seed, int replica,
                    const std::string& out_dir) {
  json j;
  j["tool"] = "epirisk";
  j["format_version"] = 1;
  const std::string cfg_text = cfg.to_json_text();
  char hash[20];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(fnv1a(cfg_text)));
  j["config_hash"] = hash;
  j["master_seed"] = master_seed;
  j["replica"] = replica;
  j["config"] = json::parse(cfg_text);
  std::ofstream out(path_join(out_dir, "manifest.json"));
  out << j.dump(2) << "\n";
}

namespace {

std::vector<double> default_roc_thresholds() {
  // dense near zero where the interesting operating points live
  std::vector<double> t;
  for (double c : {0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.25, 0.2, 0.15, 0.12, 0.1,
                   0.08, 0.06, 0.05, 0.04, 0.03, 0.025, 0.02, 0.015, 0.012, 0.01,
                   0.008, 0.006, 0.005, 0.004, 0.003, 0.0025, 0.002, 0.0015, 0.001,
                   0.0008, 0.0006, 0.0005, 0.0004, 0.0003, 0.0002, 0.0001, 0.00005,
                   0.00002, 0.00001})
    t.push_back(c);
  return t;
}

}  // namespace

ReplicaResult run_scenario(const ScenarioConfig& cfg, std::uint64_t master_seed, int replica,
                           const std::string& out_dir) {
  cfg.validate();
  ensure_directory(out_dir);
  write_manifest(cfg, master_seed, replica, out_dir);

  // network is shared across replicas (seeded by the master seed only)
  ContactNetwork net = cfg.network_file.empty()
                           ? generate_static_network(cfg.network_nodes,
                                                     derive_seed(master_seed, stream::network),
                                                     cfg.degree_params)
                           : load_network_text(cfg.network_file);

  Rng userbase_rng = make_rng(master_seed, stream::userbase);
  UserBase base = select_user_base(net, cfg.user_fraction, cfg.user_topology, userbase_rng);

  Rng world_rng = make_rng(master_seed, stream::world, replica);
  WorldState world = init_world(net, cfg.initial_infectious_fraction, cfg.world, world_rng);

  Ensemble ens;
  Rng ens_rng = make_rng(master_seed, stream::ensemble, replica);
  Rng inflate_rng = make_rng(master_seed, stream::inflate, replica);
  if (cfg.da_enabled) ens = init_ensemble(net, base.nodes, cfg.prior, cfg.da.ensemble_size, ens_rng);

  // sensor participants: fixed subset of the user base
  std::vector<int> participants;
  if (cfg.sensors_enabled) {
    Rng part_rng = make_rng(master_seed, stream::observe, 0xfeed);
    std::vector<int> pool = base.nodes;
    std::shuffle(pool.begin(), pool.end(), part_rng);
    const int n_part = static_cast<int>(std::lround(cfg.sensor_participation * pool.size()));
    participants.assign(pool.begin(), pool.begin() + n_part);
    std::sort(participants.begin(), participants.end());
  }

  PolicyState policy;
  policy.init(net.n_nodes(), cfg.policy);

  ContactHistory history;
  const bool need_history =
      cfg.policy.kind == PolicyKind::Tti || !cfg.roc_days.empty();

  ReplicaResult result;
  std::vector<CycleDiagnostics> diagnostics;
  EventLog event_log;
  Trajectory traj;
  std::vector<ObservationRecord> all_day_obs;
  ClassificationResult yesterday_class;
  bool have_class = false;
  std::vector<int> yesterday_tti_positives;
  std::vector<ObservationRecord> trailing_tests;  // for baseline evaluation

  const std::string obs_path = path_join(out_dir, "observations.csv");
  const std::string sched_path = path_join(out_dir, "schedules.csv");
  const std::string mean_path = path_join(out_dir, "ensemble_means.csv");
  const std::string roc_path = path_join(out_dir, "roc.csv");
  const std::vector<double> thresholds =
      cfg.roc_thresholds.empty() ? default_roc_thresholds() : cfg.roc_thresholds;
  const int budget =
      static_cast<int>(std::lround(cfg.test_budget_fraction * base.nodes.size()));

  for (int day = 0; day < cfg.days; ++day) {
    // 1. regenerate contact schedules with the current bounds
    Rng sched_rng = make_rng(master_seed, stream::schedule,
                             static_cast<std::uint64_t>(replica) * 1000003ull + day);
    DaySchedule sched = sample_day_schedule(net, day, sched_rng);

    // 2. apply the intervention policy (bounds take effect next regeneration)
    apply_policy(policy, net, base, have_class ? &yesterday_class : nullptr,
                 &yesterday_tti_positives, day);
    result.isolated_fraction_by_day.push_back(isolated_fraction(policy, net.n_nodes()));

    // 3. advance the surrogate world across the day
    const DayCounts counts =
        advance_world_day(world, net, sched, world_rng, cfg.export_events ? &event_log : nullptr);
    if (cfg.export_schedules) export_schedule_csv(sched, net, sched_path, day > 0);
    if (need_history) {
      history.record_day(net, sched, day);
      history.drop_before(day - 11);
    }

    const double t_obs = day + 1.0;

    // 4. emit observations (platform launches after the spin-up window)
    all_day_obs.clear();
    if (day >= cfg.da.spinup_days) {
      Rng obs_rng = make_rng(master_seed, stream::observe,
                             static_cast<std::uint64_t>(replica) * 1000003ull + day);
      const double prevalence = cfg.da_enabled ? estimate_prevalence(ens)
                                               : 1.0 / static_cast<double>(base.size());
      auto tests =
          administer_tests(world, base.nodes, budget, cfg.test_assay, prevalence, t_obs, obs_rng);
      yesterday_tti_positives.clear();
      if (cfg.policy.kind == PolicyKind::Tti) {
        // TTI notifies positives plus their traced contacts (same >15 min rule)
        const ClassificationResult traced =
            baseline_contact_tracing(tests, history, day, net, base, world);
        yesterday_tti_positives = traced.flagged;
      }
      all_day_obs.insert(all_day_obs.end(), tests.begin(), tests.end());
      trailing_tests.insert(trailing_tests.end(), tests.begin(), tests.end());
      if (cfg.sensors_enabled) {
        auto sens = sensor_readings(world, participants, cfg.sensor_assay, prevalence, t_obs,
                                    obs_rng);
        all_day_obs.insert(all_day_obs.end(), sens.begin(), sens.end());
      }
      auto status = status_observations(world, base.nodes, t_obs);
      all_day_obs.insert(all_day_obs.end(), status.begin(), status.end());
      write_observations_csv(all_day_obs, obs_path, day > cfg.da.spinup_days);
      // drop tests older than the evaluation window
      trailing_tests.erase(
          std::remove_if(trailing_tests.begin(), trailing_tests.end(),
                         [&](const ObservationRecord& r) { return r.time < day - 10.0; }),
          trailing_tests.end());
    } else {
      yesterday_tti_positives.clear();
    }

    // 5. advance the risk model: pure forecast during spin-up, DA cycle after
    if (cfg.da_enabled) {
      ModelDay md = build_model_day(net, sched, ens.model);
      std::vector<ModelDay> window{std::move(md)};
      if (day < cfg.da.spinup_days) {
        integrate(ens, window, day, day + 1.0, cfg.integrator, &traj);
      } else {
        CycleDiagnostics diag;
        diag.day = day;
        da_cycle(ens, window, day, all_day_obs, cfg.da, cfg.prior, cfg.integrator, inflate_rng,
                 traj, &diag);
        diagnostics.push_back(diag);
      }
    }

    // 6. classification for today (data through today only)
    if (cfg.da_enabled && day >= cfg.da.spinup_days) {
      yesterday_class = classify(ens, net, base, world, cfg.policy.classification_threshold);
      have_class = true;
    }

    // 7. daily logging
    const int prevalent = world.count(Health::I);
    result.daily.push_back(scale_aggregate(day, counts, prevalent, net.n_nodes()));

    if (std::find(cfg.roc_days.begin(), cfg.roc_days.end(), day) != cfg.roc_days.end() &&
        cfg.da_enabled) {
      ReplicaResult::Evaluation ev;
      ev.day = day;
      const std::vector<double> risk = ensemble_mean_infectiousness(ens);
      ev.da_curve = roc_curve(risk, net, base, world, thresholds);
      // baselines scored on the same day: tests from today only, tracing over
      // the trailing ten days
      std::vector<ObservationRecord> today_tests;
      for (const ObservationRecord& r : trailing_tests)
        if (r.time >= day + 0.5) today_tests.push_back(r);
      ev.test_only = baseline_test_only(today_tests, net, base, world);
      ev.contact_tracing =
          baseline_contact_tracing(today_tests, history, day, net, base, world);
      export_roc_csv(ev.da_curve, day, roc_path, !result.evaluations.empty());
      export_ensemble_mean_csv(ens, day + 1.0, mean_path, !result.evaluations.empty());
      {
        CsvWriter truth_out(path_join(out_dir, "truth.csv"), !result.evaluations.empty());
        if (truth_out.fresh()) truth_out.row({"day", "node", "state"});
        for (int id : base.nodes)
          truth_out.row({std::to_string(day), std::to_string(id),
                         health_name(world.health[id])});
      }
      result.evaluations.push_back(std::move(ev));
    }
  }

  close_ledger(policy, cfg.days);
  result.cum_infections = world.cum_infections;
  result.cum_hospitalizations = world.cum_hospitalizations;
  result.cum_deaths = world.cum_deaths;

  export_daily_csv(result.daily, path_join(out_dir, "daily.csv"));
  export_ledger_csv(policy.ledger, path_join(out_dir, "isolation_ledger.csv"));
  if (cfg.da_enabled) export_diagnostics_csv(diagnostics, path_join(out_dir, "da_diagnostics.csv"));
  if (cfg.export_events) export_event_log_csv(event_log, path_join(out_dir, "events.csv"));

  {
    CsvWriter out(path_join(out_dir, "isolated_fraction.csv"));
    out.row({"day", "isolated_fraction"});
    for (int day = 0; day < cfg.days; ++day)
      out.row({std::to_string(day), format_double(result.isolated_fraction_by_day[day])});
  }

  if (!cfg.nyc_reference_file.empty()) {
    // side-by-side table against the reference series (same shape as daily.csv)
    auto ref = read_csv(cfg.nyc_reference_file, true);
    CsvWriter out(path_join(out_dir, "reference_comparison.csv"));
    out.row({"day", "sim_new_deaths", "ref_new_deaths", "sim_new_hospitalizations",
             "ref_new_hospitalizations"});
    for (const auto& row : ref) {
      if (row.size() < 4) continue;
      const int day = std::stoi(row[0]);
      if (day < 0 || day >= static_cast<int>(result.daily.size())) continue;
      out.row({row[0], format_double(result.daily[day].new_deaths), row[3],
               format_double(result.daily[day].new_hospitalizations), row[2]});
    }
  }

  return result;
}

}  // namespace epirisk
