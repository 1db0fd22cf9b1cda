#pragma once

#include <optional>
#include <string>
#include <vector>

#include "epirisk/classify.hpp"
#include "epirisk/da.hpp"
#include "epirisk/kmc.hpp"
#include "epirisk/policy.hpp"
#include "epirisk/userbase.hpp"

namespace epirisk {

// Declarative experiment description; see docs in README and
// ScenarioConfig::from_json for the schema (versioned).
struct ScenarioConfig {
  int version = 1;

  // network: either a file to load or generation parameters
  std::string network_file;
  int network_nodes = 5000;
  DegreeParams degree_params;

  // run
  int days = 90;
  double initial_infectious_fraction = 0.0016;
  WorldParams world;

  // user base
  double user_fraction = 1.0;
  UserBaseTopology user_topology = UserBaseTopology::Neighbor;

  // observations
  double test_budget_fraction = 0.25;  // f
  AssaySpec test_assay = kDiagnosticAssay;
  bool sensors_enabled = false;
  double sensor_participation = 0.75;
  AssaySpec sensor_assay = kSensorAssay;

  // data assimilation
  bool da_enabled = true;
  DAConfig da;
  PriorSpec prior;
  IntegratorConfig integrator;

  // intervention
  InterventionPolicy policy;

  // outputs
  std::vector<int> roc_days;
  std::vector<double> roc_thresholds;  // optional, default grid
  bool export_events = false;
  bool export_schedules = false;
  std::string nyc_reference_file;

  static ScenarioConfig from_json_file(const std::string& path);
  static ScenarioConfig from_json_text(const std::string& text);
  std::string to_json_text() const;
  void validate() const;  // throws std::invalid_argument naming the field
};

struct ReplicaResult {
  std::vector<DailyAggregate> daily;
  long long cum_infections = 0, cum_hospitalizations = 0, cum_deaths = 0;
  std::vector<double> isolated_fraction_by_day;
  // evaluation snapshots at roc_days
  struct Evaluation {
    int day = 0;
    std::vector<RocPoint> da_curve;
    ClassificationResult test_only;
    ClassificationResult contact_tracing;
  };
  std::vector<Evaluation> evaluations;
};

// Runs one replica of the daily loop (schedules, policy, world, observations,
// DA cycle, classification, logging) and writes the run artifacts under
// out_dir. Writes the manifest first so aborts leave it behind.
ReplicaResult run_scenario(const ScenarioConfig& cfg, std::uint64_t master_seed, int replica,
                           const std::string& out_dir);

void write_manifest(const ScenarioConfig& cfg, std::uint64_t master_seed, int replica,
                    const std::string& out_dir);

}  // namespace epirisk
