#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "epirisk/diurnal.hpp"
#include "epirisk/rng.hpp"

namespace epirisk {

// Node groups: (a) hospital beds, (b) healthcare workers, (c) community.
// Nodes are generated as Hcw or Community; a node belongs to HospitalBed
// only while it occupies a bed.
enum class Group : std::uint8_t { HospitalBed = 0, Hcw = 1, Community = 2 };

enum class AgeBand : std::uint8_t { A0_17 = 0, A18_44 = 1, A45_64 = 2, A65_74 = 3, A75plus = 4 };
inline constexpr int kAgeBands = 5;

struct NodeMeta {
  int id = 0;
  Group group = Group::Community;
  AgeBand age_band = AgeBand::A18_44;
  double lambda_min = kDefaultLambdaMin;  // day^-1
  double lambda_max = kDefaultLambdaMax;  // day^-1
  int k_ext = 0;  // static neighbors outside the user base
};

struct Edge {
  int u = 0, v = 0;
  bool ward = false;  // hospital-ward edge: transmission modifier 0.1
  bool dead = false;  // removed ward edges stay as tombstones (ids are stable)
};

struct DegreeParams {
  double community_exponent = 2.5;
  double community_mean_degree = 10.0;
  int community_max_degree = 100;
  double bed_mean_degree = 5.0;        // ER inside group (a)
  double hcw_mean_degree = 10.0;       // ER inside group (b)
  double bed_hcw_mean_degree = 5.0;    // (a)-(b), per admitted node
  double hcw_community_mean_degree = 5.0;  // (b)-(c), per HCW
};

struct ContactNetwork {
  std::vector<NodeMeta> nodes;
  std::vector<Edge> edges;
  std::vector<std::uint8_t> suspended;     // suspension count per edge (both ends may suspend)
  std::vector<std::vector<int>> incident;  // incident edge ids per node
  std::vector<bool> retired;               // deceased nodes: no further contacts
  double mean_degree_community = 10.0;     // khat in the activation law
  DegreeParams degree_params;

  std::vector<int> hospital_occupants;

  struct AdmissionRecord {
    std::vector<int> ward_edges;
    std::vector<int> suspended_edges;
  };
  std::unordered_map<int, AdmissionRecord> admissions;
  std::unordered_map<int, std::pair<double, double>> saved_bounds;

  int n_nodes() const { return static_cast<int>(nodes.size()); }
  int n_hcw = 0, n_community = 0;
  bool is_admitted(int node) const { return admissions.count(node) > 0; }
  bool edge_ready(int e) const {
    const Edge& ed = edges[e];
    return !ed.dead && suspended[e] == 0 && !retired[ed.u] && !retired[ed.v];
  }
};

// Degree-corrected SBM: power-law community block (stub matching with
// rejection of self/multi edges), ER inside the HCW block, ER bridges
// between HCW and community. Beds start unoccupied so no (a) edges exist yet.
ContactNetwork generate_static_network(int n_total, std::uint64_t rng_seed,
                                       const DegreeParams& params = {});

// Hand-built networks (tests, tools).
ContactNetwork make_empty_network(int n_nodes);
void add_static_edge(ContactNetwork& net, int u, int v, bool ward = false);

// A_ji(t): pairwise activation rate, floor at min(lambda_min), peak from
// min(lambda_max) under the diurnal envelope.
double edge_activation_rate(const NodeMeta& a, const NodeMeta& b, double t_of_day, double khat);
double edge_peak_rate(const NodeMeta& a, const NodeMeta& b, double khat);

// Day-averaged single-node rate and the stationary activity probability
// <w_i> = Abar / (mu + Abar) derived from it.
double node_day_average_rate(const NodeMeta& n, double khat);
double mean_edge_activity(const NodeMeta& n, double khat, double mu = kDeactivationRate);

// Contact interventions mutate the bounds; new values take effect at the
// next schedule regeneration. Originals are kept for restoration.
void apply_contact_bounds(ContactNetwork& net, const std::vector<int>& node_set,
                          double lambda_min_new, double lambda_max_new);
void restore_contact_bounds(ContactNetwork& net, const std::vector<int>& node_set);

// Hospital admission detaches the node from its static edges and wires it
// into the ward (ER mean degree 5 to occupants, 5 to HCW). Discharge undoes
// it exactly. Bed supply is unlimited.
void transfer_to_hospital(ContactNetwork& net, int node_id, Rng& rng);
void discharge(ContactNetwork& net, int node_id);

// Deceased nodes keep their adjacency but stop generating contacts.
void retire_node(ContactNetwork& net, int node_id);

const std::vector<double>& age_distribution();  // f(a), community
AgeBand sample_community_age(Rng& rng);
AgeBand sample_hcw_age(Rng& rng);  // working-age bands only

// Line-oriented text format and binary cache, both versioned.
void save_network_text(const ContactNetwork& net, const std::string& path);
ContactNetwork load_network_text(const std::string& path);
void save_network_binary(const ContactNetwork& net, const std::string& path);
ContactNetwork load_network_binary(const std::string& path);

}  // namespace epirisk
