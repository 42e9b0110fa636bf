#include "core/ksp.hpp"

#include <algorithm>
#include <limits>
#include <set>

namespace terra {

bool path_less(const Path& a, const Path& b) {
  if (a.distance != b.distance) return a.distance < b.distance;
  if (a.hops() != b.hops()) return a.hops() < b.hops();
  return a.nodes < b.nodes;
}

namespace {

struct PathOrder {
  bool operator()(const Path& a, const Path& b) const {
    if (path_less(a, b)) return true;
    if (path_less(b, a)) return false;
    return false;  // equivalent paths compare equal for set dedup
  }
};

// Dijkstra with (distance, hops, lexicographic sequence) labels. Graphs here
// are tiny (tens of nodes), so labels carry the whole node sequence.
std::optional<Path> shortest_path(const WanGraph& g, NodeId src, NodeId dst,
                                  const std::set<NodeId>& banned_nodes,
                                  const std::set<std::pair<NodeId, NodeId>>& banned_arcs) {
  const double inf = std::numeric_limits<double>::infinity();
  int n = g.node_count();
  std::vector<Path> best(n);
  std::vector<bool> settled(n, false), reached(n, false);
  for (auto& p : best) p.distance = inf;
  best[src] = Path{{src}, 0.0};
  reached[src] = true;
  for (;;) {
    int cur = -1;
    for (int i = 0; i < n; ++i) {
      if (settled[i] || !reached[i]) continue;
      if (cur < 0 || path_less(best[i], best[cur])) cur = i;
    }
    if (cur < 0) break;
    settled[cur] = true;
    if (cur == dst) break;
    for (int ai : g.out_arcs(cur)) {
      const Arc& a = g.arc(ai);
      if (!a.up) continue;
      if (banned_nodes.count(a.dst) || banned_arcs.count({a.src, a.dst})) continue;
      if (settled[a.dst]) continue;
      // keep paths simple even with banned sets empty
      if (std::find(best[cur].nodes.begin(), best[cur].nodes.end(), a.dst) !=
          best[cur].nodes.end())
        continue;
      Path cand = best[cur];
      cand.nodes.push_back(a.dst);
      cand.distance += a.latency_s;
      if (!reached[a.dst] || path_less(cand, best[a.dst])) {
        best[a.dst] = std::move(cand);
        reached[a.dst] = true;
      }
    }
  }
  if (!reached[dst] || best[dst].distance == inf) return std::nullopt;
  return best[dst];
}

}  // namespace

std::vector<Path> k_shortest_paths(const WanGraph& g, NodeId u, NodeId v, int k) {
  std::vector<Path> result;
  if (u == v || k < 1) return result;
  auto first = shortest_path(g, u, v, {}, {});
  if (!first) return result;
  result.push_back(*first);

  std::set<Path, PathOrder> candidates;
  while (static_cast<int>(result.size()) < k) {
    const Path& prev = result.back();
    for (size_t spur_idx = 0; spur_idx + 1 < prev.nodes.size(); ++spur_idx) {
      NodeId spur = prev.nodes[spur_idx];
      std::vector<NodeId> root(prev.nodes.begin(), prev.nodes.begin() + spur_idx + 1);

      std::set<std::pair<NodeId, NodeId>> banned_arcs;
      for (const Path& p : result) {
        if (p.nodes.size() > spur_idx + 1 &&
            std::equal(root.begin(), root.end(), p.nodes.begin()))
          banned_arcs.insert({p.nodes[spur_idx], p.nodes[spur_idx + 1]});
      }
      std::set<NodeId> banned_nodes(root.begin(), root.end());
      banned_nodes.erase(spur);

      auto spur_path = shortest_path(g, spur, v, banned_nodes, banned_arcs);
      if (!spur_path) continue;

      Path total;
      total.nodes = root;
      total.nodes.insert(total.nodes.end(), spur_path->nodes.begin() + 1, spur_path->nodes.end());
      total.distance = spur_path->distance;
      for (size_t i = 0; i + 1 <= spur_idx; ++i) {
        auto ai = g.arc_index(prev.nodes[i], prev.nodes[i + 1]);
        total.distance += g.arc(*ai).latency_s;
      }
      bool known = std::any_of(result.begin(), result.end(),
                               [&](const Path& p) { return p.nodes == total.nodes; });
      if (!known) candidates.insert(std::move(total));
    }
    if (candidates.empty()) break;
    result.push_back(*candidates.begin());
    candidates.erase(candidates.begin());
  }
  return result;
}

}  // namespace terra
