#ifndef TERRA_CORE_KSP_HPP
#define TERRA_CORE_KSP_HPP

#include <vector>

#include "core/topology.hpp"

namespace terra {

struct Path {
  std::vector<NodeId> nodes;  // u ... v, simple
  double distance = 0.0;      // sum of link latencies

  int hops() const { return static_cast<int>(nodes.size()) - 1; }
};

// Total order used everywhere paths are ranked: (distance, hops, node sequence).
bool path_less(const Path& a, const Path& b);

// Yen's algorithm over up links only. Returns at most k simple paths in
// path_less order; empty when u and v are disconnected. The list for k is a
// prefix of the list for any k' > k.
std::vector<Path> k_shortest_paths(const WanGraph& g, NodeId u, NodeId v, int k);

}  // namespace terra

#endif
