#include "epirisk/observations.hpp"

#include <algorithm>
#include <stdexcept>

#include "epirisk/io.hpp"

namespace epirisk {

Fidelity fidelity_of(ObsKind kind) {
  switch (kind) {
    case ObsKind::SensorPositive:
    case ObsKind::SensorNegative:
      return Fidelity::Low;
    case ObsKind::TestPositive:
    case ObsKind::TestNegative:
    case ObsKind::SeroPositive:
    case ObsKind::SeroNegative:
      return Fidelity::Medium;
    case ObsKind::Hospitalized:
    case ObsKind::NotHospitalized:
    case ObsKind::Deceased:
    case ObsKind::Alive:
      return Fidelity::High;
  }
  return Fidelity::High;
}

const char* obs_kind_name(ObsKind kind) {
  switch (kind) {
    case ObsKind::TestPositive: return "test_positive";
    case ObsKind::TestNegative: return "test_negative";
    case ObsKind::SensorPositive: return "sensor_positive";
    case ObsKind::SensorNegative: return "sensor_negative";
    case ObsKind::Hospitalized: return "hospitalized";
    case ObsKind::NotHospitalized: return "not_hospitalized";
    case ObsKind::Deceased: return "deceased";
    case ObsKind::Alive: return "alive";
    case ObsKind::SeroPositive: return "sero_positive";
    case ObsKind::SeroNegative: return "sero_negative";
  }
  return "?";
}

ObsKind obs_kind_from_name(const std::string& name) {
  for (int k = 0; k <= static_cast<int>(ObsKind::SeroNegative); ++k)
    if (name == obs_kind_name(static_cast<ObsKind>(k))) return static_cast<ObsKind>(k);
  throw std::invalid_argument("unknown observation kind: " + name);
}

double ppv(const AssaySpec& assay, double prevalence) {
  const double tp = assay.sensitivity * prevalence;
  const double fp = (1.0 - assay.specificity) * (1.0 - prevalence);
  return tp / (tp + fp);
}

double for_rate(const AssaySpec& assay, double prevalence) {
  const double fn = (1.0 - assay.sensitivity) * prevalence;
  const double tn = assay.specificity * (1.0 - prevalence);
  return fn / (fn + tn);
}

std::vector<ObservationRecord> administer_tests(const WorldState& world,
                                                const std::vector<int>& user_nodes, int budget,
                                                const AssaySpec& assay, double prevalence,
                                                double time, Rng& rng) {
  std::vector<ObservationRecord> out;
  if (budget <= 0) return out;
  if (budget > static_cast<int>(user_nodes.size()))
    throw std::invalid_argument("administer_tests: budget exceeds user base");

  // partial Fisher-Yates draw without replacement
  std::vector<int> pool = user_nodes;
  out.reserve(budget);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double pos_value = ppv(assay, prevalence);
  const double neg_value = for_rate(assay, prevalence);
  for (int k = 0; k < budget; ++k) {
    std::uniform_int_distribution<int> pick(k, static_cast<int>(pool.size()) - 1);
    std::swap(pool[k], pool[pick(rng)]);
    const int node = pool[k];
    const bool infectious = world.health[node] == Health::I;
    const bool positive =
        infectious ? uni(rng) < assay.sensitivity : uni(rng) > assay.specificity;
    ObservationRecord rec;
    rec.node = node;
    rec.time = time;
    rec.kind = positive ? ObsKind::TestPositive : ObsKind::TestNegative;
    rec.observed_value = positive ? pos_value : neg_value;
    rec.error_rate = positive ? 1.0 - pos_value : neg_value;
    out.push_back(rec);
  }
  std::sort(out.begin(), out.end(),
            [](const ObservationRecord& a, const ObservationRecord& b) { return a.node < b.node; });
  return out;
}

std::vector<ObservationRecord> sensor_readings(const WorldState& world,
                                               const std::vector<int>& participants,
                                               const AssaySpec& assay, double prevalence,
                                               double time, Rng& rng, bool emit_negatives) {
  std::vector<ObservationRecord> out;
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double pos_value = ppv(assay, prevalence);
  const double neg_value = for_rate(assay, prevalence);
  for (int node : participants) {
    const bool infectious = world.health[node] == Health::I;
    const bool flagged =
        infectious ? uni(rng) < assay.sensitivity : uni(rng) > assay.specificity;
    if (!flagged && !emit_negatives) continue;
    ObservationRecord rec;
    rec.node = node;
    rec.time = time;
    rec.kind = flagged ? ObsKind::SensorPositive : ObsKind::SensorNegative;
    rec.observed_value = flagged ? pos_value : neg_value;
    rec.error_rate = flagged ? 1.0 - pos_value : neg_value;
    out.push_back(rec);
  }
  return out;
}

std::vector<ObservationRecord> status_observations(const WorldState& world,
                                                   const std::vector<int>& user_nodes,
                                                   double time) {
  std::vector<ObservationRecord> out;
  out.reserve(2 * user_nodes.size());
  for (int node : user_nodes) {
    const Health h = world.health[node];
    ObservationRecord hosp;
    hosp.node = node;
    hosp.time = time;
    hosp.kind = h == Health::H ? ObsKind::Hospitalized : ObsKind::NotHospitalized;
    hosp.observed_value = h == Health::H ? 1.0 : 0.0;
    hosp.error_rate = 0.0;
    out.push_back(hosp);
    ObservationRecord vital;
    vital.node = node;
    vital.time = time;
    vital.kind = h == Health::D ? ObsKind::Deceased : ObsKind::Alive;
    vital.observed_value = h == Health::D ? 1.0 : 0.0;
    vital.error_rate = 0.0;
    out.push_back(vital);
  }
  return out;
}

std::vector<ObservationRecord> serological_tests(const WorldState& world,
                                                 const std::vector<int>& user_nodes, int budget,
                                                 const AssaySpec& assay, double prevalence_r,
                                                 double time, Rng& rng) {
  std::vector<ObservationRecord> out;
  if (budget <= 0) return out;
  std::vector<int> pool = user_nodes;
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double pos_value = ppv(assay, prevalence_r);
  const double neg_value = for_rate(assay, prevalence_r);
  for (int k = 0; k < budget && k < static_cast<int>(pool.size()); ++k) {
    std::uniform_int_distribution<int> pick(k, static_cast<int>(pool.size()) - 1);
    std::swap(pool[k], pool[pick(rng)]);
    const int node = pool[k];
    const bool resistant = world.health[node] == Health::R;
    const bool positive =
        resistant ? uni(rng) < assay.sensitivity : uni(rng) > assay.specificity;
    ObservationRecord rec;
    rec.node = node;
    rec.time = time;
    rec.kind = positive ? ObsKind::SeroPositive : ObsKind::SeroNegative;
    rec.observed_value = positive ? pos_value : neg_value;
    rec.error_rate = positive ? 1.0 - pos_value : neg_value;
    out.push_back(rec);
  }
  std::sort(out.begin(), out.end(),
            [](const ObservationRecord& a, const ObservationRecord& b) { return a.node < b.node; });
  return out;
}

void write_observations_csv(const std::vector<ObservationRecord>& obs, const std::string& path,
                            bool append) {
  CsvWriter out(path, append);
  if (out.fresh()) out.row({"day", "node", "kind", "value", "error_rate", "fidelity"});
  for (const ObservationRecord& r : obs) {
    const Fidelity f = fidelity_of(r.kind);
    out.row({format_double(r.time), std::to_string(r.node), obs_kind_name(r.kind),
             format_double(r.observed_value), format_double(r.error_rate),
             f == Fidelity::Low ? "low" : (f == Fidelity::Medium ? "medium" : "high")});
  }
}

std::vector<ObservationRecord> load_observations_csv(const std::string& path) {
  std::vector<ObservationRecord> out;
  for (const auto& row : read_csv(path, true)) {
    if (row.size() < 5) throw std::runtime_error("observation csv: malformed row");
    ObservationRecord r;
    r.time = std::stod(row[0]);
    r.node = std::stoi(row[1]);
    r.kind = obs_kind_from_name(row[2]);
    r.observed_value = std::stod(row[3]);
    r.error_rate = std::stod(row[4]);
    out.push_back(r);
  }
  return out;
}

}  // namespace epirisk
