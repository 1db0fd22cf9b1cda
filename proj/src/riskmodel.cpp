#include "epirisk/riskmodel.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "epirisk/io.hpp"

namespace epirisk {

MemberState MemberState::zero(int n) {
  MemberState st;
  st.s = ArrayXd::Zero(n);
  st.e = ArrayXd::Zero(n);
  st.i = ArrayXd::Zero(n);
  st.h = ArrayXd::Zero(n);
  st.r = ArrayXd::Zero(n);
  st.d = ArrayXd::Zero(n);
  return st;
}

void MemberState::clip01() {
  s = s.min(1.0).max(0.0);
  e = e.min(1.0).max(0.0);
  i = i.min(1.0).max(0.0);
  h = h.min(1.0).max(0.0);
  r = r.min(1.0).max(0.0);
  d = d.min(1.0).max(0.0);
}

double* MemberState::component(int c) {
  ArrayXd* a[6] = {&s, &e, &i, &h, &r, &d};
  return a[c]->data();
}

const double* MemberState::component(int c) const {
  const ArrayXd* a[6] = {&s, &e, &i, &h, &r, &d};
  return a[c]->data();
}

ModelDay build_model_day(const ContactNetwork& net, const DaySchedule& sched,
                         const RiskModel& model) {
  ModelDay md;
  md.day = sched.day;
  for (std::size_t e = 0; e < sched.edge_intervals.size(); ++e) {
    if (sched.edge_intervals[e].empty()) continue;
    const Edge& ed = net.edges[e];
    const int a = model.model_index_of[ed.u];
    const int b = model.model_index_of[ed.v];
    if (a < 0 || b < 0) continue;
    ModelEdge me;
    me.a = a;
    me.b = b;
    me.ward = ed.ward;
    me.intervals = sched.edge_intervals[e];
    md.edges.push_back(std::move(me));
  }
  return md;
}

std::map<int, std::vector<ModelEdge>> load_schedule_edges_csv(const std::string& path,
                                                              const RiskModel& model) {
  std::map<int, std::vector<ModelEdge>> by_day;
  std::map<std::tuple<int, int, int, bool>, std::size_t> index;  // (day,u,v,ward) -> slot
  for (const auto& row : read_csv(path, true)) {
    if (row.size() < 6) continue;
    const int day = std::stoi(row[0]);
    const int u = std::stoi(row[1]);
    const int v = std::stoi(row[2]);
    const bool ward = row[3] == "1";
    const int a = model.model_index_of[u], b = model.model_index_of[v];
    if (a < 0 || b < 0) continue;
    const auto key = std::make_tuple(day, u, v, ward);
    auto& edges = by_day[day];
    auto it = index.find(key);
    if (it == index.end()) {
      ModelEdge me;
      me.a = a;
      me.b = b;
      me.ward = ward;
      it = index.emplace(key, edges.size()).first;
      edges.push_back(std::move(me));
    }
    edges[it->second].intervals.push_back({std::stod(row[4]), std::stod(row[5])});
  }
  return by_day;
}

void compute_closure(const std::vector<MemberState>& members, std::vector<ActiveEdge>& edges,
                     double denom_floor) {
  const int m = static_cast<int>(members.size());
  const double inv_m = 1.0 / m;
  for (ActiveEdge& ae : edges) {
    double ms_a = 0, ms_b = 0, mi_a = 0, mi_b = 0, mh_a = 0, mh_b = 0;
    double si_ab = 0, si_ba = 0, sh_ab = 0, sh_ba = 0;  // ab: source a, target b
    for (const MemberState& st : members) {
      const double sa = st.s[ae.a], sb = st.s[ae.b];
      const double ia = st.i[ae.a], ib = st.i[ae.b];
      const double ha = st.h[ae.a], hb = st.h[ae.b];
      ms_a += sa;
      ms_b += sb;
      mi_a += ia;
      mi_b += ib;
      mh_a += ha;
      mh_b += hb;
      si_ab += sb * ia;
      si_ba += sa * ib;
      sh_ab += sb * ha;
      sh_ba += sa * hb;
    }
    ms_a *= inv_m;
    ms_b *= inv_m;
    mi_a *= inv_m;
    mi_b *= inv_m;
    mh_a *= inv_m;
    mh_b *= inv_m;
    auto ratio = [&](double joint, double den) {
      return den > denom_floor ? joint * inv_m / den : 1.0;
    };
    ae.c_si_ab = ratio(si_ab, ms_b * mi_a);
    ae.c_si_ba = ratio(si_ba, ms_a * mi_b);
    ae.c_sh_ab = ratio(sh_ab, ms_b * mh_a);
    ae.c_sh_ba = ratio(sh_ba, ms_a * mh_b);
  }
}

ArrayXd infectious_pressure(const MemberState& st, const MemberParams& pr,
                            const std::vector<ActiveEdge>& edges, const RiskModel& model) {
  ArrayXd zeta = ArrayXd::Zero(model.n);
  for (const ActiveEdge& ae : edges) {
    const double mod = ae.ward ? model.ward_modifier : 1.0;
    const double kappa = 0.5 * mod * (pr.beta[ae.a] + pr.beta[ae.b]);
    const double wk = ae.w * kappa;
    zeta[ae.b] += wk * (st.i[ae.a] * ae.c_si_ab + st.h[ae.a] * ae.c_sh_ab);
    zeta[ae.a] += wk * (st.i[ae.b] * ae.c_si_ba + st.h[ae.b] * ae.c_sh_ba);
  }
  return zeta;
}

double estimate_prevalence(const Ensemble& ens) {
  double acc = 0.0;
  for (const MemberState& st : ens.states) acc += st.i.sum();
  const double mean = acc / (ens.model.user_count * ens.size());
  return std::max(mean, 1.0 / ens.model.user_count);
}

double estimate_resistance_prevalence(const Ensemble& ens) {
  double acc = 0.0;
  for (const MemberState& st : ens.states) acc += st.r.sum();
  const double mean = acc / (ens.model.user_count * ens.size());
  return std::max(mean, 1.0 / ens.model.user_count);
}

void master_rhs(const MemberState& st, const MemberParams& pr, const RiskModel& model,
                const std::vector<ActiveEdge>& edges, double prevalence, MemberState& deriv) {
  const ArrayXd zeta = infectious_pressure(st, pr, edges, model);
  // exogenous infection rate eta_i = beta_i, scaled by external degree,
  // stationary edge activity, and the estimated prevalence
  const ArrayXd drive =
      (zeta + model.k_ext * model.w_mean * prevalence * pr.beta) * st.s;
  deriv.s = -drive;
  deriv.e = drive - pr.sigma * st.e;
  deriv.i = pr.sigma * st.e - pr.gamma * st.i;
  deriv.h = model.h_frac * pr.gamma * st.i - pr.gamma_h * st.h;
  deriv.r = (1.0 - model.h_frac - model.d_frac) * pr.gamma * st.i +
            (1.0 - model.dp_frac) * pr.gamma_h * st.h;
  deriv.d = model.d_frac * pr.gamma * st.i + model.dp_frac * pr.gamma_h * st.h;
}

double Trajectory::value(int member, int component, int node, double t) const {
  if (times.empty()) throw std::runtime_error("trajectory: empty");
  auto hi = std::lower_bound(times.begin(), times.end(), t);
  if (hi == times.begin()) return snapshots.front()[member].component(component)[node];
  if (hi == times.end()) return snapshots.back()[member].component(component)[node];
  const std::size_t k1 = hi - times.begin();
  const std::size_t k0 = k1 - 1;
  const double t0 = times[k0], t1 = times[k1];
  const double a = t1 > t0 ? (t - t0) / (t1 - t0) : 1.0;
  const double v0 = snapshots[k0][member].component(component)[node];
  const double v1 = snapshots[k1][member].component(component)[node];
  return (1.0 - a) * v0 + a * v1;
}

namespace {

// classic Fehlberg 4(5) tableau
constexpr double kB21 = 1.0 / 4,
                 kB31 = 3.0 / 32, kB32 = 9.0 / 32,
                 kB41 = 1932.0 / 2197, kB42 = -7200.0 / 2197, kB43 = 7296.0 / 2197,
                 kB51 = 439.0 / 216, kB52 = -8.0, kB53 = 3680.0 / 513, kB54 = -845.0 / 4104,
                 kB61 = -8.0 / 27, kB62 = 2.0, kB63 = -3544.0 / 2565, kB64 = 1859.0 / 4104,
                 kB65 = -11.0 / 40;
constexpr double kC1 = 25.0 / 216, kC3 = 1408.0 / 2565, kC4 = 2197.0 / 4104, kC5 = -1.0 / 5;
constexpr double kD1 = 16.0 / 135, kD3 = 6656.0 / 12825, kD4 = 28561.0 / 56430, kD5 = -9.0 / 50,
                 kD6 = 2.0 / 55;

struct StageBuffers {
  MemberState k1, k2, k3, k4, k5, k6, tmp, cand;
  explicit StageBuffers(int n)
      : k1(MemberState::zero(n)), k2(MemberState::zero(n)), k3(MemberState::zero(n)),
        k4(MemberState::zero(n)), k5(MemberState::zero(n)), k6(MemberState::zero(n)),
        tmp(MemberState::zero(n)), cand(MemberState::zero(n)) {}
};

// tmp = y + h * (sum of coefficient * stage) expressed per component
void combine(MemberState& out, const MemberState& y, double h,
             std::initializer_list<std::pair<const MemberState*, double>> terms) {
  ArrayXd MemberState::*comps[6] = {&MemberState::s, &MemberState::e, &MemberState::i,
                                    &MemberState::h, &MemberState::r, &MemberState::d};
  for (auto comp : comps) {
    (out.*comp) = (y.*comp);
    for (const auto& [st, c] : terms) (out.*comp) += (h * c) * ((*st).*comp);
  }
}

}  // namespace

void integrate(Ensemble& ens, const std::vector<ModelDay>& days, double t0, double t1,
               const IntegratorConfig& cfg, Trajectory* traj) {
  if (t1 <= t0) throw std::invalid_argument("integrate: t1 must exceed t0");
  const int n = ens.model.n;
  const int m = ens.size();
  const double grid_dt = 1.0 / cfg.subgrid_per_day;

  auto day_for = [&](double t) -> const ModelDay& {
    const int day = static_cast<int>(std::floor(t + 1e-12));
    for (const ModelDay& md : days)
      if (md.day == day) return md;
    throw std::runtime_error("integrate: schedule gap at day " + std::to_string(day));
  };

  if (traj) {
    traj->clear();
    traj->times.push_back(t0);
    traj->snapshots.push_back(ens.states);
  }

  std::vector<StageBuffers> buf;
  buf.reserve(m);
  for (int k = 0; k < m; ++k) buf.emplace_back(n);
  std::vector<ActiveEdge> active;

  double t = t0;
  double h = cfg.h_max;

  while (t < t1 - 1e-12) {
    const ModelDay& md = day_for(t);
    // never step across a sub-grid boundary; snapshots land exactly on it
    const double rel = (t - std::floor(t + 1e-12)) / grid_dt;
    const double next_grid =
        std::floor(t + 1e-12) + grid_dt * (std::floor(rel + 1e-9) + 1.0);
    double h_try = std::min({h, cfg.h_max, next_grid - t, t1 - t});

    // closure and prevalence depend only on the step-start states, so retries
    // with a smaller h reuse the same values through recomputation
    const double prevalence = estimate_prevalence(ens);

    for (;;) {
      if (h_try < cfg.h_min)
        throw std::runtime_error("integrate: step size underflow at t=" + std::to_string(t));

      // step-averaged edge weights for [t, t+h_try]
      const double local0 = t - md.day, local1 = local0 + h_try;
      active.clear();
      for (const ModelEdge& me : md.edges) {
        const double overlap = active_overlap(me.intervals, local0, local1);
        if (overlap <= 0.0) continue;
        ActiveEdge ae;
        ae.a = me.a;
        ae.b = me.b;
        ae.w = overlap / h_try;
        ae.ward = me.ward;
        active.push_back(ae);
      }
      compute_closure(ens.states, active);

      double err = 0.0;
      for (int k = 0; k < m; ++k) {
        StageBuffers& b = buf[k];
        const MemberState& y = ens.states[k];
        const MemberParams& pr = ens.params[k];
        master_rhs(y, pr, ens.model, active, prevalence, b.k1);
        combine(b.tmp, y, h_try, {{&b.k1, kB21}});
        master_rhs(b.tmp, pr, ens.model, active, prevalence, b.k2);
        combine(b.tmp, y, h_try, {{&b.k1, kB31}, {&b.k2, kB32}});
        master_rhs(b.tmp, pr, ens.model, active, prevalence, b.k3);
        combine(b.tmp, y, h_try, {{&b.k1, kB41}, {&b.k2, kB42}, {&b.k3, kB43}});
        master_rhs(b.tmp, pr, ens.model, active, prevalence, b.k4);
        combine(b.tmp, y, h_try, {{&b.k1, kB51}, {&b.k2, kB52}, {&b.k3, kB53}, {&b.k4, kB54}});
        master_rhs(b.tmp, pr, ens.model, active, prevalence, b.k5);
        combine(b.tmp, y, h_try,
                {{&b.k1, kB61}, {&b.k2, kB62}, {&b.k3, kB63}, {&b.k4, kB64}, {&b.k5, kB65}});
        master_rhs(b.tmp, pr, ens.model, active, prevalence, b.k6);

        combine(b.cand, y, h_try, {{&b.k1, kC1}, {&b.k3, kC3}, {&b.k4, kC4}, {&b.k5, kC5}});
        // 5th-order candidate reused in tmp for the error estimate
        combine(b.tmp, y, h_try,
                {{&b.k1, kD1}, {&b.k3, kD3}, {&b.k4, kD4}, {&b.k5, kD5}, {&b.k6, kD6}});

        for (int c = 0; c < 6; ++c) {
          const double* y4 = b.cand.component(c);
          const double* y5 = b.tmp.component(c);
          const double* y0 = y.component(c);
          for (int node = 0; node < n; ++node) {
            const double scale =
                cfg.atol + cfg.rtol * std::max(std::abs(y0[node]), std::abs(y4[node]));
            err = std::max(err, std::abs(y5[node] - y4[node]) / scale);
          }
        }
      }

      if (err <= 1.0) {
        for (int k = 0; k < m; ++k) {
          ens.states[k] = buf[k].cand;
          ens.states[k].clip01();
        }
        t += h_try;
        const double grow = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
        h = h_try * std::clamp(grow, 1.0, 5.0);
        break;
      }
      h_try *= std::clamp(0.9 * std::pow(err, -0.25), 0.1, 0.7);
    }

    if (traj) {
      const double boundary_gap = std::abs(t / grid_dt - std::round(t / grid_dt));
      if (boundary_gap < 1e-9 || t >= t1 - 1e-12) {
        traj->times.push_back(t);
        traj->snapshots.push_back(ens.states);
      }
    }
  }
}

void export_ensemble_mean_csv(const Ensemble& ens, double t, const std::string& path,
                              bool append) {
  CsvWriter out(path, append);
  if (out.fresh()) out.row({"time", "node", "s", "e", "i", "h", "r", "d"});
  const int m = ens.size();
  for (int k = 0; k < ens.model.n; ++k) {
    double v[6] = {0, 0, 0, 0, 0, 0};
    for (const MemberState& st : ens.states)
      for (int c = 0; c < 6; ++c) v[c] += st.component(c)[k];
    std::vector<std::string> row{format_double(t), std::to_string(ens.model.node_ids[k])};
    for (int c = 0; c < 6; ++c) row.push_back(format_double(v[c] / m));
    out.row(row);
  }
}

void save_ensemble_binary(const Ensemble& ens, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("cannot write ensemble: " + path);
  const char magic[12] = "EPIRISKENS1";
  std::fwrite(magic, 1, 12, f);
  const std::int32_t n = ens.model.n, m = ens.size();
  std::fwrite(&n, 4, 1, f);
  std::fwrite(&m, 4, 1, f);
  for (const MemberState& st : ens.states)
    for (int c = 0; c < 6; ++c) std::fwrite(st.component(c), 8, n, f);
  for (const MemberParams& pr : ens.params) {
    std::fwrite(pr.beta.data(), 8, n, f);
    std::fwrite(pr.sigma.data(), 8, n, f);
    std::fwrite(pr.gamma.data(), 8, n, f);
    std::fwrite(pr.gamma_h.data(), 8, n, f);
  }
  std::fclose(f);
}

void load_ensemble_binary(Ensemble& ens, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw std::runtime_error("cannot read ensemble: " + path);
  char magic[12];
  if (std::fread(magic, 1, 12, f) != 12 || std::memcmp(magic, "EPIRISKENS1", 12) != 0) {
    std::fclose(f);
    throw std::runtime_error("unsupported ensemble format: " + path);
  }
  std::int32_t n = 0, m = 0;
  read_exact(&n, 4, 1, f);
  read_exact(&m, 4, 1, f);
  if (n != ens.model.n) {
    std::fclose(f);
    throw std::runtime_error("ensemble size mismatch with model");
  }
  ens.states.assign(m, MemberState::zero(n));
  ens.params.assign(m, MemberParams{ArrayXd::Zero(n), ArrayXd::Zero(n), ArrayXd::Zero(n),
                                    ArrayXd::Zero(n)});
  for (MemberState& st : ens.states)
    for (int c = 0; c < 6; ++c) read_exact(st.component(c), 8, n, f);
  for (MemberParams& pr : ens.params) {
    read_exact(pr.beta.data(), 8, n, f);
    read_exact(pr.sigma.data(), 8, n, f);
    read_exact(pr.gamma.data(), 8, n, f);
    read_exact(pr.gamma_h.data(), 8, n, f);
  }
  std::fclose(f);
}

}  // namespace epirisk
