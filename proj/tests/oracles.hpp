#ifndef TERRA_TESTS_ORACLES_HPP
#define TERRA_TESTS_ORACLES_HPP

#include <map>
#include <vector>

#include "core/coflow.hpp"
#include "core/topology.hpp"

namespace oracles {

// Edmonds-Karp max flow on the raw arc list; deliberately independent of the
// LP machinery it is used to cross-check.
struct MaxFlowResult {
  double value = 0.0;
  std::map<int, double> arc_flow;  // arc index -> flow
};
MaxFlowResult max_flow(const terra::WanGraph& g, const std::vector<double>& caps, terra::NodeId s,
                       terra::NodeId t);

// Exhaustive priority-order search: every coflow order is evaluated by the
// sequence of equal-progress rate solutions plus greedy leftover filling,
// re-solved at each completion. Returns the best average CCT.
double best_order_avg_cct(const terra::WanGraph& g,
                          const std::vector<std::map<terra::GroupKey, double>>& coflows);

// Same evaluation for one fixed order (indices into `coflows`).
double order_avg_cct(const terra::WanGraph& g,
                     const std::vector<std::map<terra::GroupKey, double>>& coflows,
                     const std::vector<int>& order);

}  // namespace oracles

#endif
