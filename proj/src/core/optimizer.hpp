#ifndef TERRA_CORE_OPTIMIZER_HPP
#define TERRA_CORE_OPTIMIZER_HPP

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "core/coflow.hpp"
#include "core/ksp.hpp"
#include "core/topology.hpp"

namespace terra {

struct PathRate {
  std::vector<NodeId> nodes;
  double rate_bps = 0.0;
};

// Candidate routes per endpoint pair: the k shortest paths plus the union of
// their arcs. Rate variables outside the arc union are pinned to zero.
class RouteSet {
 public:
  static RouteSet k_shortest(const WanGraph& g, const std::set<GroupKey>& pairs, int k);
  // Every up arc that can lie on a simple src->dst walk; used by property
  // tests that compare against unrestricted max-flow.
  static RouteSet all_arcs(const WanGraph& g, const std::set<GroupKey>& pairs);

  bool has(GroupKey key) const { return arcs_.count(key) > 0; }
  const std::vector<int>& arcs(GroupKey key) const;
  const std::vector<Path>& paths(GroupKey key) const;
  void merge(RouteSet other);
  void clear();

 private:
  std::map<GroupKey, std::vector<int>> arcs_;
  std::map<GroupKey, std::vector<Path>> paths_;
};

struct GroupDemand {
  GroupKey key;
  double volume_bytes = 0.0;
};

struct GroupAlloc {
  GroupKey key;
  double rate_bps = 0.0;                // total source outflow
  std::map<int, double> arc_rates;      // arc index -> bytes/s
  std::vector<PathRate> paths;
};

struct Allocation {
  double gamma_s = 0.0;  // minimum completion time on the given residual
  std::vector<GroupAlloc> groups;
  int lp_count = 0;
};

// Equal-progress minimum-CCT rates for the groups of one coflow on the given
// residual capacities (aligned with g's arc indices). Linearized through the
// progress rate λ = 1/Γ: maximize λ with outflow(src_k) = |d_k|·λ. Returns
// nullopt when some group cannot make progress (disconnected endpoints or a
// zero-capacity cut). Throws ConfigError when a group has no route entry.
std::optional<Allocation> min_cct(const std::vector<GroupDemand>& groups, const WanGraph& g,
                                  const std::vector<double>& residual_bps,
                                  const RouteSet& routes);

// Standard flow decomposition of one group's arc rates into (path, rate)
// pairs. Always traces the lexicographically smallest next node. Numerical
// cycles below tol·total are dropped; larger leftovers throw.
std::vector<PathRate> decompose_paths(const WanGraph& g, const std::map<int, double>& arc_rates,
                                      NodeId src, NodeId dst);

struct McfResult {
  std::vector<GroupAlloc> groups;  // aligned with input order
  int lp_count = 0;
};

// Iterative water-filling over group rate fractions (rate/volume): maximize
// the common fraction of unfrozen groups, freeze the groups whose every
// candidate path crosses a saturated arc, repeat. Work-conserving on
// saturated cuts, max-min fair over fractions.
McfResult max_min_mcf(const std::vector<GroupDemand>& groups, const WanGraph& g,
                      const std::vector<double>& residual_bps, const RouteSet& routes);

}  // namespace terra

#endif
