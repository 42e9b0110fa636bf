#ifndef TERRA_CORE_TOPOLOGY_HPP
#define TERRA_CORE_TOPOLOGY_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace terra {

using NodeId = int;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One directed logical link between two datacenters. Parallel physical links
// are merged at load time, so each ordered (src, dst) pair appears once.
struct Arc {
  NodeId src = -1;
  NodeId dst = -1;
  double capacity_bps = 0.0;    // bytes/s, current
  double configured_bps = 0.0;  // bytes/s, restored on recovery
  double latency_s = 0.0;
  bool up = true;
};

// Value-semantic WAN graph. Immutable in normal use: apply_event returns a
// modified copy, so snapshots can be shared across threads freely.
class WanGraph {
 public:
  WanGraph() = default;

  // nodes are sorted and deduplicated; node ids are indices into that order.
  static WanGraph build(std::vector<std::string> nodes);

  // Adds capacity to the (src,dst) logical link, creating it if absent.
  // Latency of a merged link is the smallest of its parts.
  void add_link(const std::string& src, const std::string& dst, double capacity_bps,
                double latency_s);

  NodeId node(const std::string& name) const;  // throws ConfigError if unknown
  std::optional<NodeId> find_node(const std::string& name) const;
  const std::string& node_name(NodeId id) const { return names_.at(id); }
  int node_count() const { return static_cast<int>(names_.size()); }

  int arc_count() const { return static_cast<int>(arcs_.size()); }
  const Arc& arc(int idx) const { return arcs_.at(idx); }
  Arc& arc_mut(int idx) { return arcs_.at(idx); }
  const std::vector<Arc>& arcs() const { return arcs_; }
  std::optional<int> arc_index(NodeId u, NodeId v) const;

  double effective_capacity(int idx) const {
    const Arc& a = arcs_[idx];
    return a.up ? a.capacity_bps : 0.0;
  }

  std::vector<double> effective_capacities() const;

  // Arc indices leaving / entering a node, in deterministic (src,dst) order.
  const std::vector<int>& out_arcs(NodeId u) const { return out_.at(u); }
  const std::vector<int>& in_arcs(NodeId v) const { return in_.at(v); }

 private:
  std::vector<std::string> names_;
  std::map<std::string, NodeId> index_;
  std::vector<Arc> arcs_;  // sorted by (src, dst)
  std::map<std::pair<NodeId, NodeId>, int> arc_lookup_;
  std::vector<std::vector<int>> out_, in_;
};

// Topology document:
//   {nodes:[string],
//    links:[{src,dst,gbps:number,latency_ms:number,bidirectional:bool}]}
// Bidirectional links expand to two directed links of equal capacity,
// duplicate directed pairs merge by capacity summation.
WanGraph load_topology(const nlohmann::json& doc);
WanGraph load_topology_file(const std::string& path);

struct WanEvent {
  enum class Kind { kLinkFail, kLinkRecover, kBandwidthChange };
  double time = 0.0;
  Kind kind = Kind::kLinkFail;
  std::string src, dst;
  double new_capacity_bps = 0.0;  // BandwidthChange only
  uint64_t seq = 0;               // total order among same-time events
};

// Deterministic, touches exactly one link. Throws ConfigError on unknown link.
WanGraph apply_event(const WanGraph& g, const WanEvent& e);

// True iff |new-old|/old >= rho. Requires old_cap > 0 and rho in (0,1);
// a drop to zero is always significant.
bool significant_change(double old_cap, double new_cap, double rho);

}  // namespace terra

#endif
