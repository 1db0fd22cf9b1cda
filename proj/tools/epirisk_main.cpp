// Command-line driver: network generation, surrogate-world simulation,
// observation replay assimilation, full scenarios, and ROC post-processing.
//
// Exit codes: 0 success, 1 configuration error, 2 runtime error.

#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <map>
#include <string>
#include <vector>

#include "epirisk/classify.hpp"
#include "epirisk/da.hpp"
#include "epirisk/io.hpp"
#include "epirisk/kmc.hpp"
#include "epirisk/network.hpp"
#include "epirisk/scenario.hpp"
#include "epirisk/userbase.hpp"

using namespace epirisk;

namespace {

int cmd_generate_network(const std::string& out, const std::string& binary_out, int nodes,
                         std::uint64_t seed, double exponent, double mean_degree,
                         int max_degree) {
  DegreeParams params;
  params.community_exponent = exponent;
  params.community_mean_degree = mean_degree;
  params.community_max_degree = max_degree;
  ContactNetwork net = generate_static_network(nodes, seed, params);
  if (!out.empty()) save_network_text(net, out);
  if (!binary_out.empty()) save_network_binary(net, binary_out);
  std::size_t edges = 0;
  for (const Edge& e : net.edges) edges += !e.dead;
  std::printf("generated network: %d nodes (%d hcw, %d community), %zu edges\n", net.n_nodes(),
              net.n_hcw, net.n_community, edges);
  return 0;
}

int cmd_run_scenario(const std::string& config_path, std::uint64_t seed, int replicas,
                     const std::string& out_dir, bool disable_da) {
  ScenarioConfig cfg = ScenarioConfig::from_json_file(config_path);
  if (disable_da) cfg.da_enabled = false;
  cfg.validate();
  for (int rep = 0; rep < replicas; ++rep) {
    char sub[32];
    std::snprintf(sub, sizeof(sub), "rep%03d", rep);
    const std::string dir = path_join(out_dir, sub);
    const ReplicaResult res = run_scenario(cfg, seed, rep, dir);
    std::printf("replica %d: %lld infections, %lld hospitalizations, %lld deaths\n", rep,
                res.cum_infections, res.cum_hospitalizations, res.cum_deaths);
  }
  return 0;
}

int cmd_assimilate(const std::string& network_path, const std::string& obs_path,
                   const std::string& config_path, const std::string& schedules_path,
                   std::uint64_t seed, int replica, int days, const std::string& out_dir) {
  ScenarioConfig cfg = ScenarioConfig::from_json_file(config_path);
  ensure_directory(out_dir);
  ContactNetwork net = load_network_text(network_path);
  Rng userbase_rng = make_rng(seed, stream::userbase);
  UserBase base = select_user_base(net, cfg.user_fraction, cfg.user_topology, userbase_rng);
  Rng ens_rng = make_rng(seed, stream::ensemble, replica);
  Rng inflate_rng = make_rng(seed, stream::inflate, replica);
  Ensemble ens = init_ensemble(net, base.nodes, cfg.prior, cfg.da.ensemble_size, ens_rng);

  const std::vector<ObservationRecord> all_obs = load_observations_csv(obs_path);
  std::map<int, std::vector<ObservationRecord>> obs_by_day;
  int last_day = days - 1;
  for (const ObservationRecord& r : all_obs) {
    const int day = static_cast<int>(std::ceil(r.time - 1.0 - 1e-9));
    obs_by_day[day].push_back(r);
    last_day = std::max(last_day, day);
  }

  std::map<int, std::vector<ModelEdge>> replay;
  if (!schedules_path.empty()) replay = load_schedule_edges_csv(schedules_path, ens.model);

  std::vector<CycleDiagnostics> diagnostics;
  Trajectory traj;
  for (int day = 0; day <= last_day; ++day) {
    std::vector<ModelDay> window(1);
    window[0].day = day;
    if (!schedules_path.empty()) {
      auto it = replay.find(day);
      if (it != replay.end()) window[0].edges = it->second;
    } else {
      Rng sched_rng = make_rng(seed, stream::schedule,
                               static_cast<std::uint64_t>(replica) * 1000003ull + day);
      DaySchedule sched = sample_day_schedule(net, day, sched_rng);
      window[0] = build_model_day(net, sched, ens.model);
    }
    if (day < cfg.da.spinup_days) {
      integrate(ens, window, day, day + 1.0, cfg.integrator, &traj);
      continue;
    }
    CycleDiagnostics diag;
    diag.day = day;
    const auto it = obs_by_day.find(day);
    static const std::vector<ObservationRecord> empty;
    da_cycle(ens, window, day, it == obs_by_day.end() ? empty : it->second, cfg.da, cfg.prior,
             cfg.integrator, inflate_rng, traj, &diag);
    diagnostics.push_back(diag);
  }

  export_diagnostics_csv(diagnostics, path_join(out_dir, "da_diagnostics.csv"));
  export_ensemble_mean_csv(ens, last_day + 1.0, path_join(out_dir, "ensemble_means.csv"), false);
  std::printf("assimilated %zu observations over %d days\n", all_obs.size(), last_day + 1);
  return 0;
}

int cmd_roc(const std::string& network_path, const std::string& means_path,
            const std::string& truth_path, int day, const std::string& out) {
  ContactNetwork net = load_network_text(network_path);
  // risk per node from the ensemble-mean export at time day+1
  std::map<int, double> risk_by_node;
  for (const auto& row : read_csv(means_path, true)) {
    if (row.size() < 8) continue;
    if (std::abs(std::stod(row[0]) - (day + 1.0)) > 1e-9) continue;
    risk_by_node[std::stoi(row[1])] = std::stod(row[4]);
  }
  if (risk_by_node.empty())
    throw std::invalid_argument("roc: no ensemble means found for day " + std::to_string(day));

  WorldState truth;
  truth.health.assign(net.n_nodes(), Health::S);
  bool found = false;
  for (const auto& row : read_csv(truth_path, true)) {
    if (row.size() < 3 || std::stoi(row[0]) != day) continue;
    found = true;
    const std::string& s = row[2];
    static const std::map<std::string, Health> names = {
        {"S", Health::S}, {"E", Health::E}, {"I", Health::I},
        {"H", Health::H}, {"R", Health::R}, {"D", Health::D}};
    truth.health[std::stoi(row[1])] = names.at(s);
  }
  if (!found) throw std::invalid_argument("roc: no truth rows for day " + std::to_string(day));

  UserBase base;
  base.member.assign(net.n_nodes(), false);
  std::vector<double> risk;
  for (const auto& [node, value] : risk_by_node) {
    base.member[node] = true;
    base.nodes.push_back(node);
    risk.push_back(value);
  }

  std::vector<double> thresholds;
  for (double c = 0.5; c > 1e-6; c *= 0.7) thresholds.push_back(c);
  const std::vector<RocPoint> curve = roc_curve(risk, net, base, truth, thresholds);
  export_roc_csv(curve, day, out, false);
  std::printf("wrote %zu ROC points to %s\n", curve.size(), out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"epirisk: epidemic risk assessment on temporal contact networks"};
  app.require_subcommand(1);

  // generate-network
  auto* gen = app.add_subcommand("generate-network", "generate the synthetic contact network");
  std::string gen_out, gen_binary;
  int gen_nodes = 97942;
  std::uint64_t gen_seed = 1;
  double gen_exponent = 2.5, gen_mean = 10.0;
  int gen_max = 100;
  gen->add_option("--out", gen_out, "output path (text format)");
  gen->add_option("--binary", gen_binary, "output path (binary cache)");
  gen->add_option("--nodes", gen_nodes, "total node count");
  gen->add_option("--seed", gen_seed, "rng seed");
  gen->add_option("--exponent", gen_exponent, "community degree exponent");
  gen->add_option("--mean-degree", gen_mean, "community mean degree");
  gen->add_option("--max-degree", gen_max, "community max degree");

  // simulate
  auto* sim = app.add_subcommand("simulate", "run the stochastic surrogate world (no DA)");
  std::string sim_config, sim_out = "out";
  std::uint64_t sim_seed = 1;
  int sim_replicas = 1;
  sim->add_option("--config", sim_config, "scenario config (json)")->required();
  sim->add_option("--seed", sim_seed, "master seed");
  sim->add_option("--replicas", sim_replicas, "replica count");
  sim->add_option("--out-dir", sim_out, "output directory");

  // run-scenario
  auto* run = app.add_subcommand("run-scenario", "run the full daily loop with DA");
  std::string run_config, run_out = "out";
  std::uint64_t run_seed = 1;
  int run_replicas = 1;
  run->add_option("--config", run_config, "scenario config (json)")->required();
  run->add_option("--seed", run_seed, "master seed");
  run->add_option("--replicas", run_replicas, "replica count");
  run->add_option("--out-dir", run_out, "output directory");

  // assimilate
  auto* assim = app.add_subcommand("assimilate", "replay DA over a recorded observation stream");
  std::string as_net, as_obs, as_config, as_sched, as_out = "out";
  std::uint64_t as_seed = 1;
  int as_replica = 0, as_days = 0;
  assim->add_option("--network", as_net, "network file")->required();
  assim->add_option("--observations", as_obs, "observation stream csv")->required();
  assim->add_option("--config", as_config, "scenario config (json)")->required();
  assim->add_option("--schedules", as_sched, "recorded schedule csv (exact replay)");
  assim->add_option("--seed", as_seed, "master seed");
  assim->add_option("--replica", as_replica, "replica index for stream derivation");
  assim->add_option("--days", as_days, "minimum number of days to run");
  assim->add_option("--out-dir", as_out, "output directory");

  // roc
  auto* roc = app.add_subcommand("roc", "compute a ROC curve from exported run artifacts");
  std::string roc_net, roc_means, roc_truth, roc_out = "roc.csv";
  int roc_day = 0;
  roc->add_option("--network", roc_net, "network file")->required();
  roc->add_option("--means", roc_means, "ensemble_means.csv from a run")->required();
  roc->add_option("--truth", roc_truth, "truth snapshot csv from a run")->required();
  roc->add_option("--day", roc_day, "evaluation day")->required();
  roc->add_option("--out", roc_out, "output csv");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed())
      return cmd_generate_network(gen_out, gen_binary, gen_nodes, gen_seed, gen_exponent,
                                  gen_mean, gen_max);
    if (sim->parsed()) return cmd_run_scenario(sim_config, sim_seed, sim_replicas, sim_out, true);
    if (run->parsed()) return cmd_run_scenario(run_config, run_seed, run_replicas, run_out, false);
    if (assim->parsed())
      return cmd_assimilate(as_net, as_obs, as_config, as_sched, as_seed, as_replica, as_days,
                            as_out);
    if (roc->parsed()) return cmd_roc(roc_net, roc_means, roc_truth, roc_day, roc_out);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime error: %s\n", e.what());
    return 2;
  }
  return 1;
}
