#include "epirisk/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "epirisk/io.hpp"

namespace epirisk {

namespace {

inline std::uint64_t edge_key(int u, int v) {
  if (u > v) std::swap(u, v);
  return (static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint32_t>(v);
}

// Mean of the discretized truncated power law: x ~ x^-alpha on [xmin, kmax+0.5),
// degree k collects the mass of [k-0.5, k+0.5).
double discretized_power_mean(double xmin, double alpha, int kmax) {
  const double xmax = kmax + 0.5;
  auto tail = [&](double x) { return std::pow(x, 1.0 - alpha); };
  double norm = 0.0, mean = 0.0;
  const int k0 = std::max(1, static_cast<int>(std::floor(xmin + 0.5)));
  for (int k = k0; k <= kmax; ++k) {
    const double lo = std::max(xmin, k - 0.5);
    const double hi = std::min(xmax, k + 0.5);
    if (hi <= lo) continue;
    const double p = tail(lo) - tail(hi);
    norm += p;
    mean += k * p;
  }
  return mean / norm;
}

int sample_power_degree(double xmin, double alpha, int kmax, Rng& rng) {
  const double xmax = kmax + 0.5;
  const double a = std::pow(xmin, 1.0 - alpha);
  const double b = std::pow(xmax, 1.0 - alpha);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double x = std::pow(a + uni(rng) * (b - a), 1.0 / (1.0 - alpha));
  const int kmin = std::max(1, static_cast<int>(std::floor(xmin + 0.5)));
  return std::clamp(static_cast<int>(std::lround(x)), kmin, kmax);
}

// Erdos-Renyi block via geometric skipping over the pair index space.
template <typename EmitFn>
void sample_bernoulli_pairs(std::uint64_t n_pairs, double p, Rng& rng, EmitFn emit) {
  if (p <= 0.0 || n_pairs == 0) return;
  if (p >= 1.0) {
    for (std::uint64_t k = 0; k < n_pairs; ++k) emit(k);
    return;
  }
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double log1mp = std::log1p(-p);
  double index = -1.0;
  for (;;) {
    const double u = uni(rng);
    index += 1.0 + std::floor(std::log1p(-u) / log1mp);
    if (index >= static_cast<double>(n_pairs)) break;
    emit(static_cast<std::uint64_t>(index));
  }
}

void add_edge(ContactNetwork& net, int u, int v, bool ward) {
  Edge e;
  e.u = u;
  e.v = v;
  e.ward = ward;
  net.edges.push_back(e);
  net.suspended.push_back(0);
  const int id = static_cast<int>(net.edges.size()) - 1;
  net.incident[u].push_back(id);
  net.incident[v].push_back(id);
}

}  // namespace

ContactNetwork generate_static_network(int n_total, std::uint64_t rng_seed,
                                       const DegreeParams& params) {
  if (n_total < 100) throw std::invalid_argument("network generation: n_total must be >= 100");
  if (params.community_exponent <= 2.0)
    throw std::invalid_argument("network generation: community exponent must exceed 2");

  ContactNetwork net;
  net.degree_params = params;
  net.mean_degree_community = params.community_mean_degree;
  net.n_hcw = static_cast<int>(std::lround(0.05 * n_total));
  net.n_community = n_total - net.n_hcw;
  const int n_b = net.n_hcw, n_c = net.n_community;
  // the structural cap n_c - 1 binds before the configured cap on tiny blocks
  const int kmax = std::min(params.community_max_degree, n_c - 1);
  if (params.community_mean_degree >= kmax)
    throw std::invalid_argument(
        "network generation: infeasible community degree sequence (mean degree " +
        std::to_string(params.community_mean_degree) + " vs max degree " + std::to_string(kmax) +
        ")");

  Rng rng = make_rng(rng_seed, stream::network);

  net.nodes.resize(n_total);
  net.incident.resize(n_total);
  net.retired.assign(n_total, false);
  for (int id = 0; id < n_total; ++id) {
    NodeMeta& n = net.nodes[id];
    n.id = id;
    n.group = id < n_b ? Group::Hcw : Group::Community;
    n.age_band = n.group == Group::Hcw ? sample_hcw_age(rng) : sample_community_age(rng);
  }

  // --- community block: power-law degrees, configuration-model stub matching
  double lo = 1.0, hi = kmax - 1.0;
  if (discretized_power_mean(hi, params.community_exponent, kmax) < params.community_mean_degree)
    throw std::invalid_argument("network generation: community mean degree unreachable below cap");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (discretized_power_mean(mid, params.community_exponent, kmax) <
        params.community_mean_degree)
      lo = mid;
    else
      hi = mid;
  }
  const double xmin = 0.5 * (lo + hi);

  std::vector<int> degree(n_c);
  long long stub_count = 0;
  for (int k = 0; k < n_c; ++k) {
    degree[k] = sample_power_degree(xmin, params.community_exponent, kmax, rng);
    stub_count += degree[k];
  }
  if (stub_count % 2) {
    std::uniform_int_distribution<int> pick(0, n_c - 1);
    int k = pick(rng);
    while (degree[k] >= kmax) k = pick(rng);
    ++degree[k];
  }

  std::vector<int> stubs;
  stubs.reserve(static_cast<std::size_t>(stub_count) + 1);
  for (int k = 0; k < n_c; ++k)
    for (int c = 0; c < degree[k]; ++c) stubs.push_back(n_b + k);

  std::unordered_set<std::uint64_t> seen;
  seen.reserve(stubs.size());
  std::vector<int> pool = std::move(stubs);
  for (int round = 0; round < 24 && pool.size() >= 2; ++round) {
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<int> leftover;
    for (std::size_t k = 0; k + 1 < pool.size(); k += 2) {
      const int u = pool[k], v = pool[k + 1];
      if (u == v || !seen.insert(edge_key(u, v)).second) {
        leftover.push_back(u);
        leftover.push_back(v);
        continue;
      }
      add_edge(net, u, v, false);
    }
    if (pool.size() % 2) leftover.push_back(pool.back());
    pool = std::move(leftover);
  }
  // a handful of unmatched stubs is expected; they are dropped

  // --- HCW block: Erdos-Renyi
  if (n_b >= 2) {
    const double p_bb = params.hcw_mean_degree / (n_b - 1);
    sample_bernoulli_pairs(static_cast<std::uint64_t>(n_b) * (n_b - 1) / 2, p_bb, rng,
                           [&](std::uint64_t idx) {
                             // unrank pair (i<j) from the lexicographic index
                             const double di = (2.0 * n_b - 1.0 -
                                                std::sqrt((2.0 * n_b - 1.0) * (2.0 * n_b - 1.0) -
                                                          8.0 * static_cast<double>(idx))) /
                                               2.0;
                             int i = static_cast<int>(std::floor(di));
                             auto row_start = [&](int r) {
                               return static_cast<std::uint64_t>(r) * (2 * n_b - r - 1) / 2;
                             };
                             while (i > 0 && row_start(i) > idx) --i;
                             while (row_start(i + 1) <= idx) ++i;
                             const int j = static_cast<int>(idx - row_start(i)) + i + 1;
                             add_edge(net, i, j, false);
                           });
  }

  // --- HCW-community bridges: mean degree per HCW into the community
  const double p_bc = params.hcw_community_mean_degree / n_c;
  sample_bernoulli_pairs(static_cast<std::uint64_t>(n_b) * n_c, p_bc, rng,
                         [&](std::uint64_t idx) {
                           const int i = static_cast<int>(idx / n_c);
                           const int j = n_b + static_cast<int>(idx % n_c);
                           add_edge(net, i, j, false);
                         });

  return net;
}

ContactNetwork make_empty_network(int n_nodes) {
  ContactNetwork net;
  net.nodes.resize(n_nodes);
  net.incident.resize(n_nodes);
  net.retired.assign(n_nodes, false);
  net.n_hcw = 0;
  net.n_community = n_nodes;
  for (int k = 0; k < n_nodes; ++k) net.nodes[k].id = k;
  return net;
}

void add_static_edge(ContactNetwork& net, int u, int v, bool ward) { add_edge(net, u, v, ward); }

double edge_activation_rate(const NodeMeta& a, const NodeMeta& b, double t_of_day, double khat) {
  const double lmin = std::min(a.lambda_min, b.lambda_min);
  const double lmax = std::min(a.lambda_max, b.lambda_max);
  return activation_rate(lmin, lmax, t_of_day, khat);
}

double edge_peak_rate(const NodeMeta& a, const NodeMeta& b, double khat) {
  const double lmin = std::min(a.lambda_min, b.lambda_min);
  const double lmax = std::min(a.lambda_max, b.lambda_max);
  return std::max(lmin, lmax) / khat;
}

double node_day_average_rate(const NodeMeta& n, double khat) {
  if (n.lambda_max <= n.lambda_min) return n.lambda_min / khat;  // envelope never wins
  struct CacheEntry {
    double lmin = -1, lmax = -1, khat = -1, value = 0;
  };
  thread_local CacheEntry cache;
  if (cache.lmin == n.lambda_min && cache.lmax == n.lambda_max && cache.khat == khat)
    return cache.value;
  const double v = day_average_rate(n.lambda_min, n.lambda_max, khat);
  cache = {n.lambda_min, n.lambda_max, khat, v};
  return v;
}

double mean_edge_activity(const NodeMeta& n, double khat, double mu) {
  return stationary_edge_activity(node_day_average_rate(n, khat), mu);
}

void apply_contact_bounds(ContactNetwork& net, const std::vector<int>& node_set,
                          double lambda_min_new, double lambda_max_new) {
  if (lambda_min_new > lambda_max_new)
    throw std::invalid_argument("apply_contact_bounds: lambda_min > lambda_max");
  for (int id : node_set) {
    if (id < 0 || id >= net.n_nodes())
      throw std::invalid_argument("apply_contact_bounds: unknown node id " + std::to_string(id));
    NodeMeta& n = net.nodes[id];
    net.saved_bounds.emplace(id, std::make_pair(n.lambda_min, n.lambda_max));
    n.lambda_min = lambda_min_new;
    n.lambda_max = lambda_max_new;
  }
}

void restore_contact_bounds(ContactNetwork& net, const std::vector<int>& node_set) {
  for (int id : node_set) {
    if (id < 0 || id >= net.n_nodes())
      throw std::invalid_argument("restore_contact_bounds: unknown node id " + std::to_string(id));
    auto it = net.saved_bounds.find(id);
    if (it == net.saved_bounds.end()) continue;
    net.nodes[id].lambda_min = it->second.first;
    net.nodes[id].lambda_max = it->second.second;
    net.saved_bounds.erase(it);
  }
}

void transfer_to_hospital(ContactNetwork& net, int node_id, Rng& rng) {
  if (node_id < 0 || node_id >= net.n_nodes())
    throw std::invalid_argument("transfer_to_hospital: unknown node id");
  if (net.is_admitted(node_id))
    throw std::invalid_argument("transfer_to_hospital: node already admitted");

  ContactNetwork::AdmissionRecord rec;
  for (int e : net.incident[node_id]) {
    if (net.edges[e].dead || net.edges[e].ward) continue;
    ++net.suspended[e];
    rec.suspended_edges.push_back(e);
  }

  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const int n_occ = static_cast<int>(net.hospital_occupants.size());
  if (n_occ > 0) {
    const double p_bed = std::min(1.0, net.degree_params.bed_mean_degree / n_occ);
    for (int other : net.hospital_occupants) {
      if (uni(rng) < p_bed) {
        add_edge(net, node_id, other, true);
        rec.ward_edges.push_back(static_cast<int>(net.edges.size()) - 1);
      }
    }
  }
  const double p_hcw = std::min(1.0, net.degree_params.bed_hcw_mean_degree / net.n_hcw);
  for (int h = 0; h < net.n_hcw; ++h) {
    if (uni(rng) < p_hcw) {
      add_edge(net, node_id, h, true);
      rec.ward_edges.push_back(static_cast<int>(net.edges.size()) - 1);
    }
  }

  // occupants keep their generated group label; occupancy defines membership in (a)
  net.hospital_occupants.push_back(node_id);
  net.admissions.emplace(node_id, std::move(rec));
}

void discharge(ContactNetwork& net, int node_id) {
  auto it = net.admissions.find(node_id);
  if (it == net.admissions.end())
    throw std::invalid_argument("discharge: node is not admitted");
  for (int e : it->second.ward_edges) net.edges[e].dead = true;
  for (int e : it->second.suspended_edges) --net.suspended[e];
  auto& occ = net.hospital_occupants;
  occ.erase(std::find(occ.begin(), occ.end(), node_id));
  net.admissions.erase(it);
}

void retire_node(ContactNetwork& net, int node_id) { net.retired[node_id] = true; }

const std::vector<double>& age_distribution() {
  static const std::vector<double> f = {0.207, 0.400, 0.245, 0.083, 0.065};
  return f;
}

AgeBand sample_community_age(Rng& rng) {
  static thread_local std::discrete_distribution<int> dist(age_distribution().begin(),
                                                           age_distribution().end());
  return static_cast<AgeBand>(dist(rng));
}

AgeBand sample_hcw_age(Rng& rng) {
  // working-age adults, approximated by the 18-44 and 45-64 bands
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double f18 = age_distribution()[1], f45 = age_distribution()[2];
  return uni(rng) < f18 / (f18 + f45) ? AgeBand::A18_44 : AgeBand::A45_64;
}

namespace {
const char* group_tag(const ContactNetwork& net, const Edge& e) {
  auto g = [&](int id) { return net.nodes[id].group == Group::Hcw ? 'b' : 'c'; };
  char a = g(e.u), b = g(e.v);
  if (a > b) std::swap(a, b);
  static thread_local char buf[3];
  buf[0] = a;
  buf[1] = b;
  buf[2] = 0;
  return buf;
}
}  // namespace

void save_network_text(const ContactNetwork& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write network: " + path);
  out << "epirisk-network v1\n";
  out << "nodes " << net.n_nodes() << " hcw " << net.n_hcw << " community " << net.n_community
      << " khat " << format_double(net.mean_degree_community) << "\n";
  for (const NodeMeta& n : net.nodes) {
    out << "node " << n.id << ' ' << (n.group == Group::Hcw ? 'b' : 'c') << ' '
        << static_cast<int>(n.age_band) << ' ' << format_double(n.lambda_min) << ' '
        << format_double(n.lambda_max) << ' ' << n.k_ext << "\n";
  }
  std::size_t live = 0;
  for (const Edge& e : net.edges)
    if (!e.ward) ++live;
  out << "edges " << live << "\n";
  for (const Edge& e : net.edges) {
    if (e.ward) continue;
    out << "edge " << e.u << ' ' << e.v << ' ' << group_tag(net, e) << "\n";
  }
}

ContactNetwork load_network_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read network: " + path);
  std::string header;
  std::getline(in, header);
  if (header != "epirisk-network v1")
    throw std::runtime_error("unsupported network format: " + header);

  ContactNetwork net;
  std::string tok;
  int n = 0;
  in >> tok >> n >> tok >> net.n_hcw >> tok >> net.n_community >> tok >>
      net.mean_degree_community;
  net.nodes.resize(n);
  net.incident.resize(n);
  net.retired.assign(n, false);
  for (int k = 0; k < n; ++k) {
    NodeMeta& m = net.nodes[k];
    char g;
    int age;
    in >> tok >> m.id >> g >> age >> m.lambda_min >> m.lambda_max >> m.k_ext;
    if (tok != "node") throw std::runtime_error("network parse error: expected node line");
    m.group = g == 'b' ? Group::Hcw : Group::Community;
    m.age_band = static_cast<AgeBand>(age);
  }
  std::size_t n_edges = 0;
  in >> tok >> n_edges;
  if (tok != "edges") throw std::runtime_error("network parse error: expected edge count");
  net.edges.reserve(n_edges);
  for (std::size_t k = 0; k < n_edges; ++k) {
    int u, v;
    std::string tag;
    in >> tok >> u >> v >> tag;
    if (tok != "edge") throw std::runtime_error("network parse error: expected edge line");
    add_edge(net, u, v, false);
  }
  return net;
}

void save_network_binary(const ContactNetwork& net, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("cannot write network cache: " + path);
  const char magic[12] = "EPIRISKNET1";
  std::fwrite(magic, 1, 12, f);
  const std::int32_t n = net.n_nodes(), nb = net.n_hcw, nc = net.n_community;
  std::fwrite(&n, 4, 1, f);
  std::fwrite(&nb, 4, 1, f);
  std::fwrite(&nc, 4, 1, f);
  std::fwrite(&net.mean_degree_community, 8, 1, f);
  for (const NodeMeta& m : net.nodes) {
    const std::uint8_t g = m.group == Group::Hcw ? 1 : 2, a = static_cast<std::uint8_t>(m.age_band);
    const std::int32_t kx = m.k_ext;
    std::fwrite(&g, 1, 1, f);
    std::fwrite(&a, 1, 1, f);
    std::fwrite(&m.lambda_min, 8, 1, f);
    std::fwrite(&m.lambda_max, 8, 1, f);
    std::fwrite(&kx, 4, 1, f);
  }
  std::int64_t live = 0;
  for (const Edge& e : net.edges)
    if (!e.ward) ++live;
  std::fwrite(&live, 8, 1, f);
  for (const Edge& e : net.edges) {
    if (e.ward) continue;
    const std::int32_t u = e.u, v = e.v;
    std::fwrite(&u, 4, 1, f);
    std::fwrite(&v, 4, 1, f);
  }
  std::fclose(f);
}

ContactNetwork load_network_binary(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw std::runtime_error("cannot read network cache: " + path);
  char magic[12];
  if (std::fread(magic, 1, 12, f) != 12 || std::memcmp(magic, "EPIRISKNET1", 12) != 0) {
    std::fclose(f);
    throw std::runtime_error("unsupported network cache format: " + path);
  }
  ContactNetwork net;
  std::int32_t n = 0, nb = 0, nc = 0;
  read_exact(&n, 4, 1, f);
  read_exact(&nb, 4, 1, f);
  read_exact(&nc, 4, 1, f);
  read_exact(&net.mean_degree_community, 8, 1, f);
  net.n_hcw = nb;
  net.n_community = nc;
  net.nodes.resize(n);
  net.incident.resize(n);
  net.retired.assign(n, false);
  for (int k = 0; k < n; ++k) {
    NodeMeta& m = net.nodes[k];
    m.id = k;
    std::uint8_t g = 0, a = 0;
    std::int32_t kx = 0;
    read_exact(&g, 1, 1, f);
    read_exact(&a, 1, 1, f);
    read_exact(&m.lambda_min, 8, 1, f);
    read_exact(&m.lambda_max, 8, 1, f);
    read_exact(&kx, 4, 1, f);
    m.group = g == 1 ? Group::Hcw : Group::Community;
    m.age_band = static_cast<AgeBand>(a);
    m.k_ext = kx;
  }
  std::int64_t n_edges = 0;
  read_exact(&n_edges, 8, 1, f);
  for (std::int64_t k = 0; k < n_edges; ++k) {
    std::int32_t u = 0, v = 0;
    read_exact(&u, 4, 1, f);
    read_exact(&v, 4, 1, f);
    add_edge(net, u, v, false);
  }
  std::fclose(f);
  return net;
}

}  // namespace epirisk
