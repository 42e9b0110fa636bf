#ifndef TERRA_CORE_COFLOW_HPP
#define TERRA_CORE_COFLOW_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "core/topology.hpp"

namespace terra {

struct Flow {
  std::string id;
  NodeId src = -1;
  NodeId dst = -1;
  int64_t volume_bytes = 0;
};

// All flows of one coflow sharing a (src,dst) datacenter pair. Scheduled as a
// unit: intra-group flow ordering cannot change the group's completion time
// as long as the total rate is preserved.
struct FlowGroup {
  NodeId src = -1;
  NodeId dst = -1;
  int64_t volume_bytes = 0;
  std::vector<std::string> flow_ids;
};

using GroupKey = std::pair<NodeId, NodeId>;

enum class CoflowState { kPending, kActive, kPreempted, kFinished, kRejected };

struct Coflow {
  std::string id;
  double arrival_s = 0.0;
  std::optional<double> deadline_s;  // relative to arrival
  std::vector<Flow> flows;
  std::map<GroupKey, FlowGroup> groups;
  bool admitted = false;
  CoflowState state = CoflowState::kPending;

  int64_t total_bytes() const;
};

// Coalesces flows by (src, dst). Volumes are sum-preserved per pair; the
// result is independent of input order. Throws ConfigError on src == dst or
// non-positive volume.
std::map<GroupKey, FlowGroup> group_flows(const std::vector<Flow>& flows);

// Additive update: merges new flows into existing or new groups. Duplicate
// flow ids and updates to finished/rejected coflows are errors.
void update_coflow(Coflow& c, const std::vector<Flow>& new_flows);

// Submission document: {id, arrival_s, deadline_s?, flows:[{id,src,dst,bytes}]}
Coflow coflow_from_json(const nlohmann::json& doc, const WanGraph& g);

}  // namespace terra

#endif
