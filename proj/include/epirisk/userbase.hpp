#pragma once

#include <string>
#include <vector>

#include "epirisk/network.hpp"
#include "epirisk/rng.hpp"

namespace epirisk {

enum class UserBaseTopology : std::uint8_t { Neighbor = 0, Random = 1 };

struct UserBase {
  std::vector<int> nodes;        // sorted network ids
  std::vector<bool> member;      // by network id
  UserBaseTopology topology = UserBaseTopology::Neighbor;

  int size() const { return static_cast<int>(nodes.size()); }
  bool contains(int id) const { return member[id]; }
};

// Neighbor topology grows a BFS closure from a random seed until the target
// fraction is reached; random topology samples nodes uniformly. Also fills
// each node's k_ext (static neighbors outside the base).
UserBase select_user_base(ContactNetwork& net, double target_fraction,
                          UserBaseTopology topology, Rng& rng);

// Users all of whose static neighbors are users themselves.
int interior_count(const ContactNetwork& net, const UserBase& base);
// Average number of exterior nodes adjacent to a user.
double exterior_connectivity(const ContactNetwork& net, const UserBase& base);

}  // namespace epirisk
