#include "epirisk/policy.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

#include "epirisk/io.hpp"

namespace epirisk {

void PolicyState::init(int n_nodes, const InterventionPolicy& p) {
  policy = p;
  lockdown_applied = false;
  isolated.assign(n_nodes, false);
  consecutive_negative.assign(n_nodes, 0);
  release_day.assign(n_nodes, -1);
  ledger.clear();
}

namespace {

void start_isolation(PolicyState& ps, ContactNetwork& net, int node, int day) {
  if (ps.isolated[node]) return;
  apply_contact_bounds(net, {node}, ps.policy.isolation_lambda, ps.policy.isolation_lambda);
  ps.isolated[node] = true;
  ps.ledger.push_back({node, day, -1});
}

void end_isolation(PolicyState& ps, ContactNetwork& net, int node, int day) {
  if (!ps.isolated[node]) return;
  restore_contact_bounds(net, {node});
  ps.isolated[node] = false;
  for (auto it = ps.ledger.rbegin(); it != ps.ledger.rend(); ++it) {
    if (it->node == node && it->end_day < 0) {
      it->end_day = day;
      break;
    }
  }
}

}  // namespace

void apply_policy(PolicyState& ps, ContactNetwork& net, const UserBase& base,
                  const ClassificationResult* yesterday_classification,
                  const std::vector<int>* yesterday_tti_positives, int day) {
  const InterventionPolicy& p = ps.policy;
  switch (p.kind) {
    case PolicyKind::None:
      return;

    case PolicyKind::Lockdown: {
      if (day < p.start_day || ps.lockdown_applied) return;
      for (const NodeMeta& n : net.nodes)
        if (n.group == Group::Community)
          apply_contact_bounds(net, {n.id}, n.lambda_min, p.lockdown_lambda_max);
      ps.lockdown_applied = true;
      return;
    }

    case PolicyKind::DaIsolation: {
      if (day < p.start_day || !yesterday_classification) return;
      std::unordered_set<int> flagged(yesterday_classification->flagged.begin(),
                                      yesterday_classification->flagged.end());
      for (int id : base.nodes) {
        if (flagged.count(id)) {
          ps.consecutive_negative[id] = 0;
          start_isolation(ps, net, id, day);
        } else if (ps.isolated[id]) {
          // release after classified negative for the required consecutive days
          if (++ps.consecutive_negative[id] >= p.release_negative_days) {
            ps.consecutive_negative[id] = 0;
            end_isolation(ps, net, id, day);
          }
        }
      }
      return;
    }

    case PolicyKind::Tti: {
      if (day < p.start_day) return;
      // release expired isolations first
      for (int id : base.nodes) {
        if (ps.isolated[id] && ps.release_day[id] >= 0 && day >= ps.release_day[id]) {
          ps.release_day[id] = -1;
          end_isolation(ps, net, id, day);
        }
      }
      if (yesterday_tti_positives) {
        for (int id : *yesterday_tti_positives) {
          if (!base.contains(id)) continue;  // compliance confined to the user base
          start_isolation(ps, net, id, day);
          ps.release_day[id] = day + p.tti_isolation_days;
        }
      }
      return;
    }
  }
}

void close_ledger(PolicyState& ps, int end_day) {
  for (IsolationSpan& span : ps.ledger)
    if (span.end_day < 0) span.end_day = end_day;
}

double isolated_fraction(const PolicyState& ps, int n_nodes) {
  int count = 0;
  for (bool b : ps.isolated) count += b;
  return n_nodes ? static_cast<double>(count) / n_nodes : 0.0;
}

void export_ledger_csv(const std::vector<IsolationSpan>& ledger, const std::string& path) {
  CsvWriter out(path);
  out.row({"node", "start_day", "end_day"});
  for (const IsolationSpan& s : ledger)
    out.row({std::to_string(s.node), std::to_string(s.start_day), std::to_string(s.end_day)});
}

}  // namespace epirisk
