#include "epirisk/userbase.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>

namespace epirisk {

namespace {

void compute_k_ext(ContactNetwork& net, const UserBase& base) {
  for (NodeMeta& n : net.nodes) n.k_ext = 0;
  for (const Edge& e : net.edges) {
    if (e.dead || e.ward) continue;
    if (base.member[e.u] && !base.member[e.v]) ++net.nodes[e.u].k_ext;
    if (base.member[e.v] && !base.member[e.u]) ++net.nodes[e.v].k_ext;
  }
}

}  // namespace

UserBase select_user_base(ContactNetwork& net, double target_fraction,
                          UserBaseTopology topology, Rng& rng) {
  if (target_fraction <= 0.0 || target_fraction > 1.0)
    throw std::invalid_argument("select_user_base: fraction must be in (0,1]");
  const int n = net.n_nodes();
  const int target = std::max(1, static_cast<int>(std::lround(target_fraction * n)));

  UserBase base;
  base.topology = topology;
  base.member.assign(n, false);

  if (target >= n) {
    for (int k = 0; k < n; ++k) base.member[k] = true;
  } else if (topology == UserBaseTopology::Random) {
    std::vector<int> ids(n);
    for (int k = 0; k < n; ++k) ids[k] = k;
    std::shuffle(ids.begin(), ids.end(), rng);
    for (int k = 0; k < target; ++k) base.member[ids[k]] = true;
  } else {
    // greedy neighborhood closure from a random seed: members are processed in
    // BFS order and all their neighbors join, stopping once the target is hit
    std::uniform_int_distribution<int> pick(0, n - 1);
    const int seed = pick(rng);
    base.member[seed] = true;
    int count = 1;
    std::queue<int> frontier;
    frontier.push(seed);
    while (count < target) {
      if (frontier.empty()) {
        // disconnected remainder: restart from a fresh unvisited seed
        int fresh = -1;
        for (int k = 0; k < n; ++k)
          if (!base.member[k]) {
            fresh = k;
            break;
          }
        if (fresh < 0) break;
        base.member[fresh] = true;
        ++count;
        frontier.push(fresh);
        continue;
      }
      const int u = frontier.front();
      frontier.pop();
      for (int e : net.incident[u]) {
        if (net.edges[e].dead || net.edges[e].ward) continue;
        const Edge& ed = net.edges[e];
        const int v = ed.u == u ? ed.v : ed.u;
        if (!base.member[v]) {
          base.member[v] = true;
          ++count;
          frontier.push(v);
          if (count >= target) break;
        }
      }
    }
  }

  for (int k = 0; k < n; ++k)
    if (base.member[k]) base.nodes.push_back(k);
  compute_k_ext(net, base);
  return base;
}

int interior_count(const ContactNetwork& net, const UserBase& base) {
  int count = 0;
  for (int id : base.nodes) count += net.nodes[id].k_ext == 0;
  return count;
}

double exterior_connectivity(const ContactNetwork& net, const UserBase& base) {
  if (base.nodes.empty()) return 0.0;
  long long acc = 0;
  for (int id : base.nodes) acc += net.nodes[id].k_ext;
  return static_cast<double>(acc) / base.nodes.size();
}

}  // namespace epirisk
