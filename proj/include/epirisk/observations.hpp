#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "epirisk/kmc.hpp"
#include "epirisk/rng.hpp"

namespace epirisk {

struct AssaySpec {
  double sensitivity = 0.8;
  double specificity = 0.99;
};

inline constexpr AssaySpec kDiagnosticAssay{0.80, 0.99};
inline constexpr AssaySpec kSensorAssay{0.20, 0.98};
inline constexpr AssaySpec kSerologyAssay{0.90, 0.95};

enum class ObsKind : std::uint8_t {
  TestPositive = 0,
  TestNegative,
  SensorPositive,
  SensorNegative,
  Hospitalized,
  NotHospitalized,
  Deceased,
  Alive,
  SeroPositive,
  SeroNegative,
};

enum class Fidelity : std::uint8_t { Low = 0, Medium = 1, High = 2 };

Fidelity fidelity_of(ObsKind kind);
const char* obs_kind_name(ObsKind kind);
ObsKind obs_kind_from_name(const std::string& name);

struct ObservationRecord {
  int node = 0;
  double time = 0.0;           // days
  ObsKind kind = ObsKind::TestNegative;
  double observed_value = 0.0; // probability assigned to the observed state
  double error_rate = 0.0;     // interpreted as observation noise std
};

// Posterior infection probabilities implied by a test at prevalence P.
double ppv(const AssaySpec& assay, double prevalence);
double for_rate(const AssaySpec& assay, double prevalence);

// Random daily testing: budget nodes drawn uniformly without replacement,
// outcomes corrupted by the assay error rates, results dated the same day.
std::vector<ObservationRecord> administer_tests(const WorldState& world,
                                                const std::vector<int>& user_nodes, int budget,
                                                const AssaySpec& assay, double prevalence,
                                                double time, Rng& rng);

// One reading per participant per day. Negative readings are dropped unless
// emit_negatives is set (they are not assimilated by default).
std::vector<ObservationRecord> sensor_readings(const WorldState& world,
                                               const std::vector<int>& participants,
                                               const AssaySpec& assay, double prevalence,
                                               double time, Rng& rng, bool emit_negatives = false);

// Hospitalization and vital status of every user, known with certainty.
std::vector<ObservationRecord> status_observations(const WorldState& world,
                                                   const std::vector<int>& user_nodes,
                                                   double time);

// Serological testing (maps resistance to PPV); disabled by default.
std::vector<ObservationRecord> serological_tests(const WorldState& world,
                                                 const std::vector<int>& user_nodes, int budget,
                                                 const AssaySpec& assay, double prevalence_r,
                                                 double time, Rng& rng);

void write_observations_csv(const std::vector<ObservationRecord>& obs, const std::string& path,
                            bool append);
std::vector<ObservationRecord> load_observations_csv(const std::string& path);

}  // namespace epirisk
