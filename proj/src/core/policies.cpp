#include "core/policies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "core/units.hpp"

namespace terra {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::vector<double> progressive_fill(const std::vector<std::vector<int>>& entity_arcs,
                                     std::vector<double> caps) {
  const size_t n = entity_arcs.size();
  std::vector<double> rate(n, 0.0);
  std::vector<bool> frozen(n, false);
  double max_cap = 0.0;
  for (double c : caps) max_cap = std::max(max_cap, c);
  const double eps = 1e-9 * std::max(1.0, max_cap);
  for (size_t i = 0; i < n; ++i)
    if (entity_arcs[i].empty()) frozen[i] = true;

  for (;;) {
    // Freeze entities riding a saturated arc.
    bool froze = false;
    for (size_t i = 0; i < n; ++i) {
      if (frozen[i]) continue;
      for (int ai : entity_arcs[i])
        if (caps[ai] <= eps) {
          frozen[i] = true;
          froze = true;
          break;
        }
    }
    std::vector<int> active_on(caps.size(), 0);
    bool any_active = false;
    for (size_t i = 0; i < n; ++i) {
      if (frozen[i]) continue;
      any_active = true;
      for (int ai : entity_arcs[i]) ++active_on[ai];
    }
    if (!any_active) break;
    if (froze) continue;
    double delta = kInf;
    for (size_t ai = 0; ai < caps.size(); ++ai)
      if (active_on[ai] > 0) delta = std::min(delta, caps[ai] / active_on[ai]);
    if (delta == kInf || delta <= 0.0) break;
    for (size_t i = 0; i < n; ++i)
      if (!frozen[i]) rate[i] += delta;
    for (size_t ai = 0; ai < caps.size(); ++ai)
      if (active_on[ai] > 0) caps[ai] -= delta * active_on[ai];
    // The bottleneck arc is now at (or below) eps, so the next pass freezes
    // everything crossing it.
  }
  return rate;
}

namespace {

std::vector<int> path_arcs(const WanGraph& g, const std::vector<NodeId>& nodes) {
  std::vector<int> arcs;
  for (size_t i = 0; i + 1 < nodes.size(); ++i) {
    auto ai = g.arc_index(nodes[i], nodes[i + 1]);
    if (!ai) return {};
    arcs.push_back(*ai);
  }
  return arcs;
}

// ---------------------------------------------------------------------------
// Per-flow fairness on fixed single-path routes. Routes follow the current
// shortest path, so a link failure reroutes affected flows but the sharing
// discipline stays flow-level fair.
class PerFlowPolicy : public Policy {
 public:
  explicit PerFlowPolicy(bool multipath) : multipath_(multipath) {}
  std::string name() const override { return multipath_ ? "multipath" : "perflow"; }
  UnitKind unit_kind(const SimCore&, const Coflow&) const override { return UnitKind::kFlow; }

  void assign(SimCore& sim, const EventBatch& batch) override {
    (void)batch;
    const WanGraph& g = sim.graph();
    const int k = multipath_ ? sim.config().sched.path_count : 1;
    std::vector<int> unit_of_entity;
    std::vector<std::vector<NodeId>> entity_nodes;
    std::vector<std::vector<int>> entity_arcs;
    for (const SimCoflow* sc : sim.active_coflows()) {
      for (int idx : sim.units_of(sc->meta.id)) {
        const TransferUnit& u = sim.units()[idx];
        if (u.done) continue;
        auto paths = k_shortest_paths(g, u.key.first, u.key.second, k);
        for (const Path& p : paths) {
          auto arcs = path_arcs(g, p.nodes);
          if (arcs.empty()) continue;
          unit_of_entity.push_back(idx);
          entity_nodes.push_back(p.nodes);
          entity_arcs.push_back(std::move(arcs));
        }
      }
    }
    std::vector<double> rates = progressive_fill(entity_arcs, g.effective_capacities());
    std::map<int, std::vector<PathRate>> per_unit;
    for (size_t e = 0; e < rates.size(); ++e) {
      if (rates[e] <= 0.0) continue;
      per_unit[unit_of_entity[e]].push_back({entity_nodes[e], rates[e]});
    }
    for (const SimCoflow* sc : sim.active_coflows())
      for (int idx : sim.units_of(sc->meta.id)) {
        if (sim.units()[idx].done) continue;
        auto it = per_unit.find(idx);
        sim.set_rates(idx, it == per_unit.end() ? std::vector<PathRate>{} : it->second);
      }
  }

 private:
  bool multipath_;
};

// ---------------------------------------------------------------------------
// Non-blocking-fabric coflow scheduler: priority order from aggregate
// ingress/egress ports (shortest effective bottleneck first), rates paced so
// a coflow's flows finish together, leftovers backfilled fairly. Flows ride
// fixed single shortest paths.
class VarysPolicy : public Policy {
 public:
  std::string name() const override { return "varys"; }
  UnitKind unit_kind(const SimCore&, const Coflow&) const override { return UnitKind::kFlow; }

  void assign(SimCore& sim, const EventBatch& batch) override {
    (void)batch;
    const WanGraph& g = sim.graph();
    const int n_dc = g.node_count();
    std::vector<double> egress(n_dc, 0.0), ingress(n_dc, 0.0);
    for (int ai = 0; ai < g.arc_count(); ++ai) {
      const Arc& a = g.arc(ai);
      egress[a.src] += g.effective_capacity(ai);
      ingress[a.dst] += g.effective_capacity(ai);
    }

    struct Entry {
      double bottleneck;
      double arrival;
      std::string id;
      const SimCoflow* sc;
    };
    std::vector<Entry> order;
    for (const SimCoflow* sc : sim.active_coflows()) {
      std::vector<double> out_load(n_dc, 0.0), in_load(n_dc, 0.0);
      for (int idx : sim.units_of(sc->meta.id)) {
        const TransferUnit& u = sim.units()[idx];
        if (u.done) continue;
        out_load[u.key.first] += u.remaining_bytes;
        in_load[u.key.second] += u.remaining_bytes;
      }
      double bn = 0.0;
      for (int d = 0; d < n_dc; ++d) {
        if (out_load[d] > 0.0) bn = std::max(bn, egress[d] > 0.0 ? out_load[d] / egress[d] : kInf);
        if (in_load[d] > 0.0) bn = std::max(bn, ingress[d] > 0.0 ? in_load[d] / ingress[d] : kInf);
      }
      order.push_back({bn, sc->submit_s, sc->meta.id, sc});
    }
    std::sort(order.begin(), order.end(), [](const Entry& a, const Entry& b) {
      return std::tie(a.bottleneck, a.arrival, a.id) < std::tie(b.bottleneck, b.arrival, b.id);
    });

    std::vector<double> residual = g.effective_capacities();
    const double dust = 1e-9 * (1.0 + *std::max_element(residual.begin(), residual.end()));
    std::map<int, double> flow_rate;
    std::map<int, std::vector<NodeId>> flow_route;

    for (const Entry& e : order) {
      struct FlowInfo {
        int idx;
        double remaining;
        std::vector<int> arcs;
      };
      std::vector<FlowInfo> flows;
      for (int idx : sim.units_of(e.id)) {
        const TransferUnit& u = sim.units()[idx];
        if (u.done) continue;
        auto paths = k_shortest_paths(g, u.key.first, u.key.second, 1);
        if (paths.empty()) continue;
        auto arcs = path_arcs(g, paths[0].nodes);
        flow_route[idx] = paths[0].nodes;
        bool blocked = false;
        for (int ai : arcs)
          if (residual[ai] <= dust) blocked = true;
        if (blocked) continue;
        flows.push_back({idx, u.remaining_bytes, std::move(arcs)});
      }
      if (flows.empty()) continue;
      // MADD on the real links: slowest bottleneck dictates the pace.
      std::map<int, double> load;
      for (const FlowInfo& f : flows)
        for (int ai : f.arcs) load[ai] += f.remaining;
      double gamma = 0.0;
      for (const auto& [ai, l] : load) gamma = std::max(gamma, l / residual[ai]);
      if (gamma <= 0.0) continue;
      for (const FlowInfo& f : flows) {
        double r = f.remaining / gamma;
        flow_rate[f.idx] += r;
        for (int ai : f.arcs) residual[ai] = std::max(0.0, residual[ai] - r);
      }
    }

    // Work conservation: leftover capacity backfills every active flow.
    std::vector<int> fill_units;
    std::vector<std::vector<int>> fill_arcs;
    for (const SimCoflow* sc : sim.active_coflows())
      for (int idx : sim.units_of(sc->meta.id)) {
        const TransferUnit& u = sim.units()[idx];
        if (u.done) continue;
        auto it = flow_route.find(idx);
        if (it == flow_route.end()) {
          auto paths = k_shortest_paths(g, u.key.first, u.key.second, 1);
          if (paths.empty()) continue;
          flow_route[idx] = paths[0].nodes;
          it = flow_route.find(idx);
        }
        fill_units.push_back(idx);
        fill_arcs.push_back(path_arcs(g, it->second));
      }
    std::vector<double> extra = progressive_fill(fill_arcs, residual);
    for (size_t i = 0; i < fill_units.size(); ++i) flow_rate[fill_units[i]] += extra[i];

    for (const SimCoflow* sc : sim.active_coflows())
      for (int idx : sim.units_of(sc->meta.id)) {
        if (sim.units()[idx].done) continue;
        double r = flow_rate.count(idx) ? flow_rate[idx] : 0.0;
        if (r > 0.0 && flow_route.count(idx))
          sim.set_rates(idx, {{flow_route[idx], r}});
        else
          sim.set_rates(idx, {});
      }
  }
};

// ---------------------------------------------------------------------------
// Application-agnostic max-min MCF over all active FlowGroups each round.
class SwanMcfPolicy : public Policy {
 public:
  std::string name() const override { return "swan_mcf"; }
  UnitKind unit_kind(const SimCore&, const Coflow&) const override { return UnitKind::kGroup; }

  void assign(SimCore& sim, const EventBatch& batch) override {
    const WanGraph& g = sim.graph();
    for (const WanEvent& e : batch.wan_events) {
      if (e.kind != WanEvent::Kind::kBandwidthChange) routes_.clear();
    }
    std::vector<GroupDemand> demands;
    std::vector<int> unit_of;
    std::set<GroupKey> pairs;
    for (const SimCoflow* sc : sim.active_coflows())
      for (int idx : sim.units_of(sc->meta.id)) {
        const TransferUnit& u = sim.units()[idx];
        if (u.done || u.remaining_bytes <= 0.0) continue;
        demands.push_back({u.key, u.remaining_bytes});
        unit_of.push_back(idx);
        pairs.insert(u.key);
      }
    std::set<GroupKey> missing;
    for (const GroupKey& p : pairs)
      if (!routes_.has(p)) missing.insert(p);
    if (!missing.empty())
      routes_.merge(RouteSet::k_shortest(g, missing, sim.config().sched.path_count));

    if (demands.empty()) return;
    McfResult mcf = max_min_mcf(demands, g, g.effective_capacities(), routes_);
    sim.add_lp_count(mcf.lp_count);
    for (size_t i = 0; i < demands.size(); ++i) sim.set_rates(unit_of[i], mcf.groups[i].paths);
  }

 private:
  RouteSet routes_;
};

// ---------------------------------------------------------------------------
// The joint scheduling-routing policy around OnlineScheduler. Coflows below
// the volume threshold bypass central scheduling and run per-flow on
// whatever the schedule left over.
class TerraPolicy : public Policy {
 public:
  std::string name() const override { return "terra"; }

  UnitKind unit_kind(const SimCore& sim, const Coflow& c) const override {
    return is_bypass(sim, c) ? UnitKind::kFlow : UnitKind::kGroup;
  }

  AdmitDecision admit(SimCore& sim, const SimCoflow& sc) override {
    ensure_sched(sim);
    if (is_bypass(sim, sc.meta)) return AdmitDecision::kAccept;
    if (!sc.meta.deadline_s) return AdmitDecision::kAccept;
    ActiveCoflow ac = to_active_full(sc);
    return sched_->admit(sim.now(), ac) ? AdmitDecision::kAdmit : AdmitDecision::kReject;
  }

  void assign(SimCore& sim, const EventBatch& batch) override {
    ensure_sched(sim);

    std::vector<ActiveCoflow> actives = collect_actives(sim);
    bool significant = false;
    for (const WanEvent& e : batch.wan_events)
      significant |= sched_->apply_wan_event(sim.now(), e, actives);

    bool full = false;
    std::string trigger;
    std::set<std::string> restrict_to;
    for (const std::string& id : batch.coflows_finished) {
      if (bypass_.count(id)) continue;
      sched_->forget(id);
      full = true;
      trigger = "coflow_finish";
    }
    for (const auto& [id, key] : batch.groups_finished) {
      if (bypass_.count(id)) continue;
      if (sim.coflow(id).finish_s >= 0.0) continue;  // folded into coflow_finish
      auto aff = sched_->affected_by_group(id, key);
      restrict_to.insert(aff.begin(), aff.end());
      sched_->group_finished(id, key);
      if (trigger.empty()) trigger = "group_finish";
    }
    bool had_central_arrival = false;
    for (const std::string& id : batch.arrivals)
      if (!bypass_.count(id)) had_central_arrival = true;
    if (had_central_arrival) {
      full = true;
      trigger = "arrival";
    }
    if (significant) {
      full = true;
      if (trigger.empty()) trigger = "wan_event";
    }

    if (full || !restrict_to.empty()) {
      // Drop finished coflows from the restricted set; they are gone.
      const Schedule& sched = sched_->reschedule(sim.now(), trigger, actives,
                                                 full ? std::set<std::string>{} : restrict_to);
      sim.add_lp_count(sched.lp_count);
      apply_schedule(sim, sched);
      sim.push_schedule_record(sched.to_json(sim.graph()));
    }
    fill_bypass(sim);
  }

 private:
  bool is_bypass(const SimCore& sim, const Coflow& c) const {
    double threshold = sim.config().sched.min_volume_bytes;
    return threshold > 0.0 && static_cast<double>(c.total_bytes()) < threshold;
  }

  void ensure_sched(SimCore& sim) {
    if (!sched_) sched_.emplace(sim.graph(), sim.config().sched);
  }

  static ActiveCoflow to_active_full(const SimCoflow& sc) {
    ActiveCoflow ac;
    ac.id = sc.meta.id;
    ac.arrival_s = sc.meta.arrival_s;
    ac.deadline_s = sc.meta.deadline_s;
    for (const auto& [key, grp] : sc.meta.groups)
      ac.groups.push_back({key, static_cast<double>(grp.volume_bytes)});
    return ac;
  }

  std::vector<ActiveCoflow> collect_actives(SimCore& sim) {
    std::vector<ActiveCoflow> actives;
    bypass_or_not(sim);
    for (const SimCoflow* sc : sim.active_coflows()) {
      if (bypass_.count(sc->meta.id)) continue;
      ActiveCoflow ac;
      ac.id = sc->meta.id;
      ac.arrival_s = sc->submit_s;
      ac.deadline_s = sc->meta.deadline_s;
      for (int idx : sim.units_of(sc->meta.id)) {
        const TransferUnit& u = sim.units()[idx];
        if (u.done || u.remaining_bytes <= 0.0) continue;
        ac.groups.push_back({u.key, u.remaining_bytes});
      }
      if (!ac.groups.empty()) actives.push_back(std::move(ac));
    }
    return actives;
  }

  void bypass_or_not(SimCore& sim) {
    for (const SimCoflow* sc : sim.active_coflows())
      if (is_bypass(sim, sc->meta)) bypass_.insert(sc->meta.id);
  }

  void apply_schedule(SimCore& sim, const Schedule& sched) {
    std::map<std::pair<std::string, GroupKey>, std::vector<PathRate>> rates;
    for (const ScheduleEntry& e : sched.entries) {
      for (const auto& [key, gs] : e.groups) {
        std::vector<PathRate>& out = rates[{e.coflow_id, key}];
        for (const PathRate& p : gs.base_paths) out.push_back(p);
        for (const PathRate& p : gs.extra_paths) out.push_back(p);
      }
    }
    for (const SimCoflow* sc : sim.active_coflows()) {
      if (bypass_.count(sc->meta.id)) continue;
      for (int idx : sim.units_of(sc->meta.id)) {
        const TransferUnit& u = sim.units()[idx];
        if (u.done) continue;
        auto it = rates.find({sc->meta.id, u.key});
        sim.set_rates(idx, it == rates.end() ? std::vector<PathRate>{} : it->second);
      }
    }
  }

  void fill_bypass(SimCore& sim) {
    std::vector<int> fill_units;
    std::vector<std::vector<int>> fill_arcs;
    std::vector<std::vector<NodeId>> fill_nodes;
    const WanGraph& g = sim.graph();
    bool any = false;
    for (const SimCoflow* sc : sim.active_coflows()) {
      if (!bypass_.count(sc->meta.id)) continue;
      for (int idx : sim.units_of(sc->meta.id)) {
        const TransferUnit& u = sim.units()[idx];
        if (u.done) continue;
        any = true;
        auto paths = k_shortest_paths(g, u.key.first, u.key.second, 1);
        if (paths.empty()) continue;
        auto arcs = path_arcs(g, paths[0].nodes);
        if (arcs.empty()) continue;
        fill_units.push_back(idx);
        fill_arcs.push_back(std::move(arcs));
        fill_nodes.push_back(paths[0].nodes);
      }
    }
    if (!any) return;
    // Whatever the central schedule is not using right now.
    std::vector<double> leftover = g.effective_capacities();
    for (const TransferUnit& u : sim.units()) {
      if (u.done || bypass_.count(u.coflow_id)) continue;
      for (const PathRate& p : u.assigned) {
        auto arcs = path_arcs(g, p.nodes);
        for (int ai : arcs) leftover[ai] = std::max(0.0, leftover[ai] - p.rate_bps);
      }
    }
    std::vector<double> extra = progressive_fill(fill_arcs, leftover);
    for (size_t i = 0; i < fill_units.size(); ++i) {
      if (extra[i] > 0.0)
        sim.set_rates(fill_units[i], {{fill_nodes[i], extra[i]}});
      else
        sim.set_rates(fill_units[i], {});
    }
  }

  std::optional<OnlineScheduler> sched_;
  std::set<std::string> bypass_;
};

}  // namespace

std::shared_ptr<Policy> make_policy(const std::string& name) {
  if (name == "perflow") return std::make_shared<PerFlowPolicy>(false);
  if (name == "multipath") return std::make_shared<PerFlowPolicy>(true);
  if (name == "varys") return std::make_shared<VarysPolicy>();
  if (name == "swan_mcf") return std::make_shared<SwanMcfPolicy>();
  if (name == "terra") return std::make_shared<TerraPolicy>();
  throw ConfigError("unknown policy: " + name);
}

std::vector<std::string> policy_names() {
  return {"terra", "perflow", "multipath", "varys", "swan_mcf"};
}

}  // namespace terra
