#include "epirisk/kmc.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

#include "epirisk/io.hpp"

namespace epirisk {

const char* health_name(Health h) {
  switch (h) {
    case Health::S: return "S";
    case Health::E: return "E";
    case Health::I: return "I";
    case Health::H: return "H";
    case Health::R: return "R";
    case Health::D: return "D";
  }
  return "?";
}

AgeRates age_outcome_rates(AgeBand band) {
  switch (band) {
    case AgeBand::A0_17: return {0.002, 0.000001, 0.019};
    case AgeBand::A18_44: return {0.010, 0.00001, 0.073};
    case AgeBand::A45_64: return {0.040, 0.001, 0.193};
    case AgeBand::A65_74: return {0.076, 0.007, 0.327};
    case AgeBand::A75plus: return {0.160, 0.015, 0.512};
  }
  return {};
}

int WorldState::count(Health h) const {
  int c = 0;
  for (Health s : health) c += s == h;
  return c;
}

WorldState init_world(const ContactNetwork& net, double initial_infectious_fraction,
                      const WorldParams& params, Rng& rng) {
  if (initial_infectious_fraction < 0.0 || initial_infectious_fraction > 1.0)
    throw std::invalid_argument("init_world: initial fraction outside [0,1]");
  const int n = net.n_nodes();
  WorldState w;
  w.params = params;
  w.health.assign(n, Health::S);
  w.pending.assign(n, {});
  w.outcome.resize(n);
  for (int k = 0; k < n; ++k) w.outcome[k] = age_outcome_rates(net.nodes[k].age_band);

  const int n_seed = static_cast<int>(std::lround(initial_infectious_fraction * n));
  std::vector<int> ids(n);
  for (int k = 0; k < n; ++k) ids[k] = k;
  std::shuffle(ids.begin(), ids.end(), rng);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int k = 0; k < n_seed; ++k) {
    const int node = ids[k];
    w.health[node] = Health::I;
    if (params.gamma > 0.0) {
      std::exponential_distribution<double> exit(params.gamma);
      const AgeRates& o = w.outcome[node];
      const double u = uni(rng);
      Health to = u < o.h ? Health::H : (u < o.h + o.d ? Health::D : Health::R);
      w.pending[node] = {exit(rng), to, true};
    }
  }
  return w;
}

void force_state(WorldState& world, int node, Health h, Rng& rng) {
  world.health[node] = h;
  world.pending[node].valid = false;
  double rate = 0.0;
  Health to = Health::R;
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const AgeRates& o = world.outcome[node];
  if (h == Health::E) {
    rate = world.params.sigma;
    to = Health::I;
  } else if (h == Health::I) {
    rate = world.params.gamma;
    const double u = uni(rng);
    to = u < o.h ? Health::H : (u < o.h + o.d ? Health::D : Health::R);
  } else if (h == Health::H) {
    rate = world.params.gamma_h;
    to = uni(rng) < o.dp ? Health::D : Health::R;
  }
  if (rate <= 0.0) return;
  std::exponential_distribution<double> wait(rate);
  world.pending[node] = {world.t + wait(rng), to, true};
}

namespace {

struct Ev {
  double t = 0.0;
  enum Type : int { ContactOn = 0, ContactOff = 1, Transmission = 2, Node = 3 } type = Node;
  int a = 0;                 // edge id (contact/transmission) or node id
  int src = -1, dst = -1;    // transmission endpoints
  std::uint32_t session = 0;
  bool operator>(const Ev& o) const {
    if (t != o.t) return t > o.t;
    if (type != o.type) return type > o.type;
    return a > o.a;
  }
};

struct DayEngine {
  WorldState& w;
  ContactNetwork& net;
  DaySchedule& sched;
  Rng& rng;
  EventLog* log;
  double day0;  // absolute day start

  std::priority_queue<Ev, std::vector<Ev>, std::greater<Ev>> q;
  std::vector<std::uint32_t> session;
  std::vector<char> active;
  std::vector<std::size_t> ptr;  // next interval per edge
  std::vector<std::vector<int>> active_edges_of;  // per node
  std::uniform_real_distribution<double> uni{0.0, 1.0};
  DayCounts counts;

  void resize_edges() {
    const std::size_t n = net.edges.size();
    sched.ensure_size(n);
    session.resize(n, 0);
    active.resize(n, 0);
    ptr.resize(n, 0);
  }

  void push_next_on(int e) {
    if (ptr[e] < sched.edge_intervals[e].size())
      q.push({sched.edge_intervals[e][ptr[e]].begin, Ev::ContactOn, e, -1, -1, session[e]});
  }

  void record(double t_local, int node, Health from, Health to, EventRecord::Cause cause) {
    if (log) log->push_back({day0 + t_local, node, from, to, cause});
  }

  double kappa(const Edge& ed) const {
    return (ed.ward ? w.params.ward_modifier : 1.0) * w.params.beta;
  }

  void schedule_transmission(int e, double t_local) {
    const Edge& ed = net.edges[e];
    const Health hu = w.health[ed.u], hv = w.health[ed.v];
    int src, dst;
    if ((hu == Health::I || hu == Health::H) && hv == Health::S) {
      src = ed.u;
      dst = ed.v;
    } else if ((hv == Health::I || hv == Health::H) && hu == Health::S) {
      src = ed.v;
      dst = ed.u;
    } else {
      return;
    }
    const double k = kappa(ed);
    if (k <= 0.0) return;
    std::exponential_distribution<double> wait(k);
    q.push({t_local + wait(rng), Ev::Transmission, e, src, dst, session[e]});
  }

  void open_contact(int e, double t_local) {
    active[e] = 1;
    active_edges_of[net.edges[e].u].push_back(e);
    active_edges_of[net.edges[e].v].push_back(e);
    schedule_transmission(e, t_local);
  }

  void close_contact(int e) {
    active[e] = 0;
    ++session[e];
    for (int n : {net.edges[e].u, net.edges[e].v}) {
      auto& v = active_edges_of[n];
      v.erase(std::find(v.begin(), v.end(), e));
    }
  }

  // close an edge mid-day and drop its remaining schedule
  void kill_edge_schedule(int e, double t_local) {
    truncate_intervals(sched.edge_intervals[e], t_local);
    if (active[e]) close_contact(e);
    ptr[e] = sched.edge_intervals[e].size();
  }

  void sample_fresh(int e, double t_local) {
    const Edge& ed = net.edges[e];
    sched.edge_intervals[e] =
        sample_edge_intervals(net.nodes[ed.u], net.nodes[ed.v], net.mean_degree_community,
                              t_local, rng);
    ptr[e] = 0;
    ++session[e];
    push_next_on(e);
  }

  void schedule_node_exit(int node, double t_local, Health state) {
    double rate = 0.0;
    Health to = Health::R;
    const AgeRates& o = w.outcome[node];
    if (state == Health::E) {
      rate = w.params.sigma;
      to = Health::I;
    } else if (state == Health::I) {
      rate = w.params.gamma;
      const double u = uni(rng);
      to = u < o.h ? Health::H : (u < o.h + o.d ? Health::D : Health::R);
    } else if (state == Health::H) {
      rate = w.params.gamma_h;
      to = uni(rng) < o.dp ? Health::D : Health::R;
    }
    if (rate <= 0.0) {
      w.pending[node].valid = false;
      return;
    }
    std::exponential_distribution<double> wait(rate);
    const double t_abs = day0 + t_local + wait(rng);
    w.pending[node] = {t_abs, to, true};
    if (t_abs < day0 + 1.0) q.push({t_abs - day0, Ev::Node, node, -1, -1, 0});
  }

  void admit(int node, double t_local) {
    // close current contacts and drop the rest of the node's static schedule
    std::vector<int> to_kill;
    for (int e : net.incident[node])
      if (net.edge_ready(e)) to_kill.push_back(e);
    const std::size_t first_new = net.edges.size();
    transfer_to_hospital(net, node, rng);
    resize_edges();
    active_edges_of.resize(net.n_nodes());
    for (int e : to_kill) kill_edge_schedule(e, t_local);
    for (std::size_t e = first_new; e < net.edges.size(); ++e) {
      if (!net.edge_ready(static_cast<int>(e))) continue;
      const Edge& ed = net.edges[e];
      sched.edge_intervals[e] = sample_edge_intervals(
          net.nodes[ed.u], net.nodes[ed.v], net.mean_degree_community, t_local, rng);
      push_next_on(static_cast<int>(e));
    }
  }

  void release(int node, double t_local, bool died) {
    auto it = net.admissions.find(node);
    std::vector<int> ward, statics;
    if (it != net.admissions.end()) {
      ward = it->second.ward_edges;
      statics = it->second.suspended_edges;
    }
    for (int e : ward) kill_edge_schedule(e, t_local);
    discharge(net, node);
    if (died) {
      retire_node(net, node);
      return;
    }
    for (int e : statics)
      if (net.edge_ready(e)) sample_fresh(e, t_local);
  }

  void die_in_place(int node, double t_local) {
    for (int e : net.incident[node])
      if (net.edge_ready(e)) kill_edge_schedule(e, t_local);
    retire_node(net, node);
  }

  void transition(int node, Health to, double t_local, EventRecord::Cause cause) {
    const Health from = w.health[node];
    w.health[node] = to;
    record(t_local, node, from, to, cause);
    switch (to) {
      case Health::E:
        ++counts.new_infections;
        ++w.cum_infections;
        schedule_node_exit(node, t_local, Health::E);
        break;
      case Health::I: {
        schedule_node_exit(node, t_local, Health::I);
        // newly infectious: open channels on already-active contacts
        const auto snapshot = active_edges_of[node];
        for (int e : snapshot) schedule_transmission(e, t_local);
        break;
      }
      case Health::H:
        ++counts.new_hospitalizations;
        ++w.cum_hospitalizations;
        if (w.params.hospital_transfer) admit(node, t_local);
        schedule_node_exit(node, t_local, Health::H);
        break;
      case Health::R:
        w.pending[node].valid = false;
        if (from == Health::H && w.params.hospital_transfer) release(node, t_local, false);
        break;
      case Health::D:
        ++counts.new_deaths;
        ++w.cum_deaths;
        w.pending[node].valid = false;
        if (from == Health::H && w.params.hospital_transfer)
          release(node, t_local, true);
        else
          die_in_place(node, t_local);
        break;
      case Health::S:
        break;
    }
  }

  void run() {
    resize_edges();
    active_edges_of.assign(net.n_nodes(), {});
    for (std::size_t e = 0; e < net.edges.size(); ++e) {
      ptr[e] = 0;
      if (net.edge_ready(static_cast<int>(e))) push_next_on(static_cast<int>(e));
    }
    for (int n = 0; n < net.n_nodes(); ++n)
      if (w.pending[n].valid && w.pending[n].time < day0 + 1.0)
        q.push({w.pending[n].time - day0, Ev::Node, n, -1, -1, 0});

    while (!q.empty()) {
      const Ev ev = q.top();
      q.pop();
      switch (ev.type) {
        case Ev::ContactOn: {
          const int e = ev.a;
          if (ev.session != session[e] || !net.edge_ready(e)) break;
          const auto& ivals = sched.edge_intervals[e];
          if (ptr[e] >= ivals.size() || ivals[ptr[e]].begin != ev.t) break;
          open_contact(e, ev.t);
          q.push({ivals[ptr[e]].end, Ev::ContactOff, e, -1, -1, session[e]});
          break;
        }
        case Ev::ContactOff: {
          const int e = ev.a;
          if (ev.session != session[e] || !active[e]) break;
          close_contact(e);
          ++ptr[e];
          push_next_on(e);
          break;
        }
        case Ev::Transmission: {
          const int e = ev.a;
          if (ev.session != session[e] || !active[e]) break;
          const Health hs = w.health[ev.src];
          if ((hs != Health::I && hs != Health::H) || w.health[ev.dst] != Health::S) break;
          transition(ev.dst, Health::E, ev.t, EventRecord::Cause::Transmission);
          break;
        }
        case Ev::Node: {
          const int node = ev.a;
          const auto& p = w.pending[node];
          if (!p.valid) break;  // at most one pending entry per node is ever queued
          w.pending[node].valid = false;
          transition(node, p.to, ev.t, EventRecord::Cause::Progression);
          break;
        }
      }
    }
    w.t = day0 + 1.0;
  }
};

}  // namespace

DayCounts advance_world_day(WorldState& world, ContactNetwork& net, DaySchedule& sched,
                            Rng& rng, EventLog* log) {
  if (std::abs(world.t - sched.day) > 1e-9)
    throw std::runtime_error("advance_world_day: schedule gap (world at t=" +
                             std::to_string(world.t) + ", schedule for day " +
                             std::to_string(sched.day) + ")");
  DayEngine engine{world, net, sched, rng, log, static_cast<double>(sched.day),
                   {},    {},  {},    {},  {},  {},
                   {}};
  engine.run();
  return engine.counts;
}

EventLog run_kmc(WorldState& world, ContactNetwork& net, std::vector<DaySchedule>& schedules,
                 double t_end, Rng& rng) {
  EventLog log;
  std::size_t k = 0;
  while (world.t < t_end - 1e-9) {
    if (k >= schedules.size())
      throw std::runtime_error("run_kmc: schedule gap at t=" + std::to_string(world.t));
    advance_world_day(world, net, schedules[k], rng, &log);
    ++k;
  }
  return log;
}

void export_event_log_csv(const EventLog& log, const std::string& path) {
  CsvWriter out(path);
  out.row({"time", "node", "from", "to", "cause"});
  for (const EventRecord& e : log)
    out.row({format_double(e.t), std::to_string(e.node), health_name(e.from), health_name(e.to),
             e.cause == EventRecord::Cause::Transmission ? "transmission" : "progression"});
}

DailyAggregate scale_aggregate(int day, const DayCounts& c, int prevalent_infectious, int n) {
  const double scale = 100000.0 / n;
  DailyAggregate row;
  row.day = day;
  row.new_infections = c.new_infections * scale;
  row.new_hospitalizations = c.new_hospitalizations * scale;
  row.new_deaths = c.new_deaths * scale;
  row.prevalence = prevalent_infectious * scale;
  return row;
}

void export_daily_csv(const std::vector<DailyAggregate>& rows, const std::string& path) {
  CsvWriter out(path);
  out.row({"day", "new_infections", "new_hospitalizations", "new_deaths", "prevalence"});
  for (const DailyAggregate& r : rows)
    out.row({std::to_string(r.day), format_double(r.new_infections),
             format_double(r.new_hospitalizations), format_double(r.new_deaths),
             format_double(r.prevalence)});
}

}  // namespace epirisk
