#include "core/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "core/lp.hpp"
#include "core/units.hpp"

namespace terra {

namespace {

constexpr double kLambdaFloor = 1e-11;  // below this the coflow made no progress

double max_positive(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

// Removes circulation components from one group's arc rates. Vertices of the
// joint LP can carry per-group cycles when capacity rows couple the groups;
// they move no demand, so subtracting them keeps all constraints satisfied.
void cancel_cycles(const WanGraph& g, std::map<int, double>& rates, double dust) {
  for (;;) {
    // DFS over positive-rate arcs looking for a back edge.
    std::map<NodeId, int> color;  // 0 white, 1 gray, 2 black
    std::vector<int> cycle;
    std::function<bool(NodeId, std::vector<int>&)> dfs = [&](NodeId u,
                                                             std::vector<int>& trail) -> bool {
      color[u] = 1;
      for (int ai : g.out_arcs(u)) {
        auto it = rates.find(ai);
        if (it == rates.end() || it->second <= dust) continue;
        NodeId v = g.arc(ai).dst;
        if (color[v] == 1) {
          // found a cycle: the suffix of the trail from v, plus this arc
          size_t start = 0;
          for (size_t i = 0; i < trail.size(); ++i)
            if (g.arc(trail[i]).src == v) start = i;
          cycle.assign(trail.begin() + start, trail.end());
          cycle.push_back(ai);
          return true;
        }
        if (color[v] == 0) {
          trail.push_back(ai);
          if (dfs(v, trail)) return true;
          trail.pop_back();
        }
      }
      color[u] = 2;
      return false;
    };
    bool found = false;
    for (int n = 0; n < g.node_count() && !found; ++n) {
      if (color[n] != 0) continue;
      std::vector<int> trail;
      found = dfs(n, trail);
    }
    if (!found) return;
    double bottleneck = rates[cycle.front()];
    for (int ai : cycle) bottleneck = std::min(bottleneck, rates[ai]);
    for (int ai : cycle) {
      rates[ai] -= bottleneck;
      if (rates[ai] <= dust) rates.erase(ai);
    }
  }
}

}  // namespace

RouteSet RouteSet::k_shortest(const WanGraph& g, const std::set<GroupKey>& pairs, int k) {
  RouteSet rs;
  for (const GroupKey& key : pairs) {
    auto paths = k_shortest_paths(g, key.first, key.second, k);
    std::set<int> arc_union;
    for (const Path& p : paths) {
      for (size_t i = 0; i + 1 < p.nodes.size(); ++i) {
        auto ai = g.arc_index(p.nodes[i], p.nodes[i + 1]);
        arc_union.insert(*ai);
      }
    }
    rs.arcs_[key] = std::vector<int>(arc_union.begin(), arc_union.end());
    rs.paths_[key] = std::move(paths);
  }
  return rs;
}

RouteSet RouteSet::all_arcs(const WanGraph& g, const std::set<GroupKey>& pairs) {
  RouteSet rs;
  for (const GroupKey& key : pairs) {
    std::vector<int> arcs;
    for (int i = 0; i < g.arc_count(); ++i) {
      const Arc& a = g.arc(i);
      if (!a.up) continue;
      // Arcs entering the source or leaving the destination cannot appear on
      // a simple src->dst path.
      if (a.dst == key.first || a.src == key.second) continue;
      arcs.push_back(i);
    }
    rs.arcs_[key] = std::move(arcs);
    rs.paths_[key] = {};
  }
  return rs;
}

void RouteSet::merge(RouteSet other) {
  arcs_.merge(std::move(other.arcs_));
  paths_.merge(std::move(other.paths_));
}

void RouteSet::clear() {
  arcs_.clear();
  paths_.clear();
}

const std::vector<int>& RouteSet::arcs(GroupKey key) const {
  auto it = arcs_.find(key);
  if (it == arcs_.end()) throw ConfigError("route set has no entry for requested pair");
  return it->second;
}

const std::vector<Path>& RouteSet::paths(GroupKey key) const {
  auto it = paths_.find(key);
  if (it == paths_.end()) throw ConfigError("route set has no entry for requested pair");
  return it->second;
}

std::optional<Allocation> min_cct(const std::vector<GroupDemand>& groups, const WanGraph& g,
                                  const std::vector<double>& residual_bps,
                                  const RouteSet& routes) {
  if (groups.empty()) return Allocation{};
  for (const GroupDemand& gd : groups) {
    if (gd.volume_bytes <= 0.0) throw ConfigError("min_cct requires positive group volumes");
    if (!routes.has(gd.key)) throw ConfigError("min_cct: group without route entry");
  }

  const double cap_scale = max_positive(residual_bps);
  if (cap_scale <= 0.0) return std::nullopt;
  const double cap_dust = kCapEpsRel * cap_scale;
  double vol_scale = 0.0;
  for (const GroupDemand& gd : groups) vol_scale = std::max(vol_scale, gd.volume_bytes);

  lp::LinearProgram prob;
  int mu = prob.add_variable("mu");
  prob.set_objective(mu, 1.0);

  // var_of[gi][arc] -> lp variable
  std::vector<std::map<int, int>> var_of(groups.size());
  std::vector<std::vector<lp::Term>> arc_usage(g.arc_count());
  for (size_t gi = 0; gi < groups.size(); ++gi) {
    for (int ai : routes.arcs(groups[gi].key)) {
      const Arc& a = g.arc(ai);
      if (!a.up || residual_bps[ai] <= cap_dust) continue;
      int v = prob.add_variable("f" + std::to_string(gi) + "_" + std::to_string(ai));
      var_of[gi][ai] = v;
      arc_usage[ai].push_back({v, 1.0});
    }
  }

  for (size_t gi = 0; gi < groups.size(); ++gi) {
    const GroupDemand& gd = groups[gi];
    const double w = gd.volume_bytes / vol_scale;
    // Source demand: sum of outflow equals w·mu.
    std::vector<lp::Term> src_row{{mu, -w}};
    std::vector<lp::Term> dst_row{{mu, -w}};
    std::map<NodeId, std::vector<lp::Term>> conservation;
    for (const auto& [ai, v] : var_of[gi]) {
      const Arc& a = g.arc(ai);
      if (a.src == gd.key.first) src_row.push_back({v, 1.0});
      if (a.dst == gd.key.second) dst_row.push_back({v, 1.0});
      conservation[a.src].push_back({v, -1.0});
      conservation[a.dst].push_back({v, 1.0});
    }
    prob.add_constraint(std::move(src_row), lp::Cmp::kEq, 0.0);
    prob.add_constraint(std::move(dst_row), lp::Cmp::kEq, 0.0);
    for (auto& [node, row] : conservation) {
      if (node == gd.key.first || node == gd.key.second) continue;
      prob.add_constraint(std::move(row), lp::Cmp::kEq, 0.0);
    }
  }
  for (int ai = 0; ai < g.arc_count(); ++ai) {
    if (arc_usage[ai].empty()) continue;
    prob.add_constraint(arc_usage[ai], lp::Cmp::kLe, residual_bps[ai] / cap_scale);
  }

  lp::Solution sol = lp::solve(prob);
  if (sol.status == lp::Status::kUnbounded || sol.status == lp::Status::kNumericalFailure)
    throw ConfigError("min_cct: solver failure");
  if (sol.status == lp::Status::kInfeasible) return std::nullopt;
  if (sol.x[mu] <= kLambdaFloor) return std::nullopt;

  const double lambda = sol.x[mu] * cap_scale / vol_scale;  // progress per second
  Allocation alloc;
  alloc.gamma_s = 1.0 / lambda;
  alloc.lp_count = 1;
  for (size_t gi = 0; gi < groups.size(); ++gi) {
    GroupAlloc ga;
    ga.key = groups[gi].key;
    for (const auto& [ai, v] : var_of[gi]) {
      double rate = sol.x[v] * cap_scale;
      if (rate > cap_dust) ga.arc_rates[ai] = rate;
    }
    cancel_cycles(g, ga.arc_rates, cap_dust);
    for (const auto& [ai, r] : ga.arc_rates) {
      if (g.arc(ai).src == ga.key.first) ga.rate_bps += r;
    }
    ga.paths = decompose_paths(g, ga.arc_rates, ga.key.first, ga.key.second);
    alloc.groups.push_back(std::move(ga));
  }
  return alloc;
}

std::vector<PathRate> decompose_paths(const WanGraph& g, const std::map<int, double>& arc_rates,
                                      NodeId src, NodeId dst) {
  std::vector<PathRate> out;
  std::map<int, double> residual = arc_rates;

  double total = 0.0;
  for (const auto& [ai, r] : residual) {
    if (r < 0.0) throw ConfigError("decompose_paths: negative arc rate");
    if (g.arc(ai).src == src) total += r;
  }
  if (total <= 0.0) return out;
  const double tol = kLpTol * total;

  // Conservation pre-check at intermediate nodes.
  std::map<NodeId, double> net;
  for (const auto& [ai, r] : residual) {
    net[g.arc(ai).src] -= r;
    net[g.arc(ai).dst] += r;
  }
  for (const auto& [node, value] : net) {
    if (node == src || node == dst) continue;
    if (std::abs(value) > tol) throw ConfigError("decompose_paths: conservation violated");
  }

  double dropped_cycles = 0.0;
  auto next_arc = [&](NodeId u) -> int {
    int best = -1;
    for (int ai : g.out_arcs(u)) {
      auto it = residual.find(ai);
      if (it == residual.end() || it->second <= tol) continue;
      if (best < 0 || g.arc(ai).dst < g.arc(best).dst) best = ai;
    }
    return best;
  };

  for (;;) {
    double outflow = 0.0;
    for (int ai : g.out_arcs(src)) {
      auto it = residual.find(ai);
      if (it != residual.end()) outflow += std::max(0.0, it->second);
    }
    if (outflow <= tol) break;

    std::vector<int> trail;
    std::vector<NodeId> seen{src};
    NodeId cur = src;
    bool cycle_peeled = false;
    while (cur != dst) {
      int ai = next_arc(cur);
      if (ai < 0) throw ConfigError("decompose_paths: dead end during trace");
      NodeId nxt = g.arc(ai).dst;
      auto pos = std::find(seen.begin(), seen.end(), nxt);
      if (pos != seen.end()) {
        // Peel the numerical cycle and restart the trace.
        size_t start = static_cast<size_t>(pos - seen.begin());
        double bottleneck = residual[ai];
        for (size_t i = start; i < trail.size(); ++i)
          bottleneck = std::min(bottleneck, residual[trail[i]]);
        residual[ai] -= bottleneck;
        for (size_t i = start; i < trail.size(); ++i) residual[trail[i]] -= bottleneck;
        dropped_cycles += bottleneck;
        if (dropped_cycles > tol)
          throw ConfigError("decompose_paths: cycle rate above tolerance");
        cycle_peeled = true;
        break;
      }
      trail.push_back(ai);
      seen.push_back(nxt);
      cur = nxt;
    }
    if (cycle_peeled) continue;

    double bottleneck = residual[trail.front()];
    for (int ai : trail) bottleneck = std::min(bottleneck, residual[ai]);
    for (int ai : trail) {
      residual[ai] -= bottleneck;
      if (residual[ai] < tol) residual[ai] = 0.0;
    }
    PathRate pr;
    pr.nodes = seen;
    pr.rate_bps = bottleneck;
    out.push_back(std::move(pr));
  }
  return out;
}

McfResult max_min_mcf(const std::vector<GroupDemand>& groups, const WanGraph& g,
                      const std::vector<double>& residual_bps, const RouteSet& routes) {
  McfResult result;
  result.groups.resize(groups.size());
  for (size_t i = 0; i < groups.size(); ++i) result.groups[i].key = groups[i].key;
  if (groups.empty()) return result;

  const double cap_scale = max_positive(residual_bps);
  if (cap_scale <= 0.0) return result;
  const double cap_dust = kCapEpsRel * cap_scale;
  double vol_scale = 0.0;
  for (const GroupDemand& gd : groups) vol_scale = std::max(vol_scale, gd.volume_bytes);

  struct PathVar {
    size_t group;
    const Path* path;
    std::vector<int> arcs;
  };
  std::vector<PathVar> pvars;
  std::vector<std::vector<size_t>> paths_of(groups.size());
  for (size_t gi = 0; gi < groups.size(); ++gi) {
    if (groups[gi].volume_bytes <= 0.0) throw ConfigError("max_min_mcf: non-positive volume");
    for (const Path& p : routes.paths(groups[gi].key)) {
      PathVar pv;
      pv.group = gi;
      pv.path = &p;
      bool usable = true;
      for (size_t i = 0; i + 1 < p.nodes.size(); ++i) {
        auto ai = g.arc_index(p.nodes[i], p.nodes[i + 1]);
        if (!ai || !g.arc(*ai).up || residual_bps[*ai] <= cap_dust) {
          usable = false;
          break;
        }
        pv.arcs.push_back(*ai);
      }
      if (!usable) continue;
      paths_of[gi].push_back(pvars.size());
      pvars.push_back(std::move(pv));
    }
  }

  std::vector<std::optional<double>> frozen(groups.size());  // normalized rate
  for (size_t gi = 0; gi < groups.size(); ++gi) {
    if (paths_of[gi].empty()) frozen[gi] = 0.0;  // no viable route: rate stays zero
  }

  auto all_frozen = [&]() {
    return std::all_of(frozen.begin(), frozen.end(), [](const auto& f) { return f.has_value(); });
  };

  std::vector<double> last_solution;
  std::vector<int> lp_var_of_path;
  while (!all_frozen()) {
    lp::LinearProgram prob;
    int t = prob.add_variable("t");
    prob.set_objective(t, 1.0);
    lp_var_of_path.assign(pvars.size(), -1);
    std::vector<std::vector<lp::Term>> arc_rows(g.arc_count());
    for (size_t pi = 0; pi < pvars.size(); ++pi) {
      int v = prob.add_variable("p" + std::to_string(pi));
      lp_var_of_path[pi] = v;
      for (int ai : pvars[pi].arcs) arc_rows[ai].push_back({v, 1.0});
    }
    for (size_t gi = 0; gi < groups.size(); ++gi) {
      if (paths_of[gi].empty()) continue;
      std::vector<lp::Term> row;
      for (size_t pi : paths_of[gi]) row.push_back({lp_var_of_path[pi], 1.0});
      if (frozen[gi]) {
        prob.add_constraint(std::move(row), lp::Cmp::kEq, *frozen[gi]);
      } else {
        row.push_back({t, -(groups[gi].volume_bytes / vol_scale)});
        prob.add_constraint(std::move(row), lp::Cmp::kEq, 0.0);
      }
    }
    for (int ai = 0; ai < g.arc_count(); ++ai) {
      if (arc_rows[ai].empty()) continue;
      prob.add_constraint(arc_rows[ai], lp::Cmp::kLe, residual_bps[ai] / cap_scale);
    }

    lp::Solution sol = lp::solve(prob);
    ++result.lp_count;
    if (sol.status != lp::Status::kOptimal) throw ConfigError("max_min_mcf: solver failure");
    last_solution = sol.x;

    double tstar = sol.x[t];
    // Saturated arcs in this solution.
    std::vector<double> used(g.arc_count(), 0.0);
    for (size_t pi = 0; pi < pvars.size(); ++pi) {
      if (lp_var_of_path[pi] < 0) continue;
      for (int ai : pvars[pi].arcs) used[ai] += sol.x[lp_var_of_path[pi]];
    }
    std::vector<bool> saturated(g.arc_count(), false);
    for (int ai = 0; ai < g.arc_count(); ++ai)
      saturated[ai] = used[ai] >= residual_bps[ai] / cap_scale - 1e-7;

    bool froze_any = false;
    for (size_t gi = 0; gi < groups.size(); ++gi) {
      if (frozen[gi]) continue;
      bool tight = true;
      for (size_t pi : paths_of[gi]) {
        bool path_hits_saturated = false;
        for (int ai : pvars[pi].arcs)
          if (saturated[ai]) {
            path_hits_saturated = true;
            break;
          }
        if (!path_hits_saturated) {
          tight = false;
          break;
        }
      }
      if (tight) {
        frozen[gi] = (groups[gi].volume_bytes / vol_scale) * tstar;
        froze_any = true;
      }
    }
    if (!froze_any) {
      for (size_t gi = 0; gi < groups.size(); ++gi)
        if (!frozen[gi]) frozen[gi] = (groups[gi].volume_bytes / vol_scale) * tstar;
    }
  }

  if (!last_solution.empty()) {
    for (size_t pi = 0; pi < pvars.size(); ++pi) {
      if (lp_var_of_path[pi] < 0) continue;
      double rate = last_solution[lp_var_of_path[pi]] * cap_scale;
      if (rate <= cap_dust) continue;
      GroupAlloc& ga = result.groups[pvars[pi].group];
      ga.rate_bps += rate;
      PathRate pr;
      pr.nodes = pvars[pi].path->nodes;
      pr.rate_bps = rate;
      for (int ai : pvars[pi].arcs) ga.arc_rates[ai] += rate;
      ga.paths.push_back(std::move(pr));
    }
  }
  return result;
}

}  // namespace terra
