#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "epirisk/network.hpp"
#include "epirisk/rng.hpp"
#include "epirisk/schedule.hpp"

namespace epirisk {

enum class Health : std::uint8_t { S = 0, E, I, H, R, D };
inline constexpr int kHealthStates = 6;
const char* health_name(Health h);

struct AgeRates {
  double h = 0.0;   // hospitalization fraction
  double d = 0.0;   // community mortality fraction
  double dp = 0.0;  // in-hospital mortality fraction
};

AgeRates age_outcome_rates(AgeBand band);

struct WorldParams {
  double beta = 12.0;           // transmission rate across active edges, day^-1
  double sigma = 1.0 / 3.7;     // E -> I
  double gamma = 1.0 / 3.2;     // I -> exit
  double gamma_h = 1.0 / 5.0;   // H -> exit
  double ward_modifier = 0.1;   // a (and a') on hospital-ward edges
  bool hospital_transfer = true;  // move admitted nodes into the ward block
};

struct EventRecord {
  double t = 0.0;
  int node = 0;
  Health from = Health::S, to = Health::S;
  enum class Cause : std::uint8_t { Transmission, Progression } cause = Cause::Progression;
};
using EventLog = std::vector<EventRecord>;

struct WorldState {
  std::vector<Health> health;
  WorldParams params;
  std::vector<AgeRates> outcome;  // per node, from the age tables
  double t = 0.0;

  // at most one scheduled endogenous transition per node
  struct Pending {
    double time = 0.0;
    Health to = Health::S;
    bool valid = false;
  };
  std::vector<Pending> pending;

  long long cum_infections = 0;
  long long cum_hospitalizations = 0;
  long long cum_deaths = 0;

  int count(Health h) const;
};

struct DayCounts {
  int new_infections = 0, new_hospitalizations = 0, new_deaths = 0;
};

// Initial condition: a random fraction infectious, everyone else susceptible,
// beds empty, outcome fractions from the age tables.
WorldState init_world(const ContactNetwork& net, double initial_infectious_fraction,
                      const WorldParams& params, Rng& rng);

// Place a node in a state as if it had just entered it at world.t, sampling
// its next transition. Used for seeding what-if states.
void force_state(WorldState& world, int node, Health h, Rng& rng);

// Exact event-driven simulation of one day given that day's realized contact
// schedule. Admissions rewire the network and extend the schedule mid-day.
DayCounts advance_world_day(WorldState& world, ContactNetwork& net, DaySchedule& sched,
                            Rng& rng, EventLog* log = nullptr);

// Convenience driver over pre-sampled schedules covering [world.t, t_end).
// A missing day is a hard error.
EventLog run_kmc(WorldState& world, ContactNetwork& net, std::vector<DaySchedule>& schedules,
                 double t_end, Rng& rng);

void export_event_log_csv(const EventLog& log, const std::string& path);

struct DailyAggregate {
  int day = 0;
  double new_infections = 0, new_hospitalizations = 0, new_deaths = 0, prevalence = 0;
};
// per-100,000 scaling against population n
DailyAggregate scale_aggregate(int day, const DayCounts& c, int prevalent_infectious, int n);
void export_daily_csv(const std::vector<DailyAggregate>& rows, const std::string& path);

}  // namespace epirisk
