#pragma once

#include <string>
#include <vector>

#include "epirisk/classify.hpp"
#include "epirisk/network.hpp"
#include "epirisk/userbase.hpp"

namespace epirisk {

enum class PolicyKind : std::uint8_t { None = 0, Lockdown, Tti, DaIsolation };

struct InterventionPolicy {
  PolicyKind kind = PolicyKind::None;
  int start_day = 9;
  double lockdown_lambda_max = 33.0;   // day^-1, community, permanent
  double isolation_lambda = 4.0;       // day^-1, lambda_min = lambda_max
  int tti_isolation_days = 14;
  int release_negative_days = 5;       // DA isolation exit rule
  double classification_threshold = 0.01;
};

struct IsolationSpan {
  int node = 0;
  int start_day = 0;
  int end_day = -1;  // exclusive; -1 while open
};

// Per-day isolation bookkeeping. Bounds changes become effective at the next
// schedule regeneration.
struct PolicyState {
  InterventionPolicy policy;
  bool lockdown_applied = false;
  std::vector<bool> isolated;           // by network id
  std::vector<int> consecutive_negative;  // DA exit counter
  std::vector<int> release_day;         // TTI release schedule (-1: none)
  std::vector<IsolationSpan> ledger;

  void init(int n_nodes, const InterventionPolicy& p);
};

// Applies the policy for `day` using yesterday's classification and test
// results. Mutates contact bounds and the ledger.
void apply_policy(PolicyState& ps, ContactNetwork& net, const UserBase& base,
                  const ClassificationResult* yesterday_classification,
                  const std::vector<int>* yesterday_tti_positives, int day);

void close_ledger(PolicyState& ps, int end_day);
double isolated_fraction(const PolicyState& ps, int n_nodes);
void export_ledger_csv(const std::vector<IsolationSpan>& ledger, const std::string& path);

}  // namespace epirisk
