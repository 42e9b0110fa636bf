#include "core/topology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "core/units.hpp"

namespace terra {

WanGraph WanGraph::build(std::vector<std::string> nodes) {
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  WanGraph g;
  g.names_ = std::move(nodes);
  for (int i = 0; i < static_cast<int>(g.names_.size()); ++i) g.index_[g.names_[i]] = i;
  g.out_.resize(g.names_.size());
  g.in_.resize(g.names_.size());
  return g;
}

NodeId WanGraph::node(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown node: " + name);
  return it->second;
}

std::optional<NodeId> WanGraph::find_node(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void WanGraph::add_link(const std::string& src, const std::string& dst, double capacity_bps,
                        double latency_s) {
  NodeId u = node(src);
  NodeId v = node(dst);
  if (u == v) throw ConfigError("self-loop link on node: " + src);
  if (capacity_bps < 0.0 || !std::isfinite(capacity_bps))
    throw ConfigError("negative or non-finite capacity on link " + src + "->" + dst);
  auto key = std::make_pair(u, v);
  auto it = arc_lookup_.find(key);
  if (it != arc_lookup_.end()) {
    Arc& a = arcs_[it->second];
    a.capacity_bps += capacity_bps;
    a.configured_bps = a.capacity_bps;
    a.latency_s = std::min(a.latency_s, latency_s);
    return;
  }
  Arc a;
  a.src = u;
  a.dst = v;
  a.capacity_bps = capacity_bps;
  a.configured_bps = capacity_bps;
  a.latency_s = latency_s;
  a.up = true;
  // Keep arcs_ sorted by (src, dst) so arc indices are deterministic.
  auto pos = std::lower_bound(arcs_.begin(), arcs_.end(), key, [](const Arc& x, const auto& k) {
    return std::make_pair(x.src, x.dst) < k;
  });
  int idx = static_cast<int>(pos - arcs_.begin());
  arcs_.insert(pos, a);
  arc_lookup_.clear();
  for (int i = 0; i < static_cast<int>(arcs_.size()); ++i)
    arc_lookup_[{arcs_[i].src, arcs_[i].dst}] = i;
  for (auto& lst : out_) lst.clear();
  for (auto& lst : in_) lst.clear();
  for (int i = 0; i < static_cast<int>(arcs_.size()); ++i) {
    out_[arcs_[i].src].push_back(i);
    in_[arcs_[i].dst].push_back(i);
  }
  (void)idx;
}

std::optional<int> WanGraph::arc_index(NodeId u, NodeId v) const {
  auto it = arc_lookup_.find({u, v});
  if (it == arc_lookup_.end()) return std::nullopt;
  return it->second;
}

std::vector<double> WanGraph::effective_capacities() const {
  std::vector<double> caps(arcs_.size());
  for (size_t i = 0; i < arcs_.size(); ++i) caps[i] = effective_capacity(static_cast<int>(i));
  return caps;
}

WanGraph load_topology(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("nodes") || !doc.contains("links"))
    throw ConfigError("topology document must contain 'nodes' and 'links'");
  std::vector<std::string> nodes;
  for (const auto& n : doc.at("nodes")) {
    if (!n.is_string()) throw ConfigError("node names must be strings");
    nodes.push_back(n.get<std::string>());
  }
  if (nodes.empty()) throw ConfigError("topology has no nodes");
  WanGraph g = WanGraph::build(std::move(nodes));
  for (const auto& l : doc.at("links")) {
    if (!l.contains("src") || !l.contains("dst") || !l.contains("gbps"))
      throw ConfigError("link entries need src, dst and gbps");
    std::string src = l.at("src").get<std::string>();
    std::string dst = l.at("dst").get<std::string>();
    double gbps = l.at("gbps").get<double>();
    if (gbps < 0.0) throw ConfigError("negative capacity on link " + src + "->" + dst);
    double latency_s = 1e-3;
    if (l.contains("latency_ms")) latency_s = l.at("latency_ms").get<double>() * 1e-3;
    if (latency_s < 0.0) throw ConfigError("negative latency on link " + src + "->" + dst);
    bool bidir = l.value("bidirectional", false);
    g.add_link(src, dst, gbps_to_bps(gbps), latency_s);
    if (bidir) g.add_link(dst, src, gbps_to_bps(gbps), latency_s);
  }
  return g;
}

WanGraph load_topology_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open topology file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed topology JSON in " + path + ": " + e.what());
  }
  return load_topology(doc);
}

WanGraph apply_event(const WanGraph& g, const WanEvent& e) {
  WanGraph out = g;
  NodeId u = out.node(e.src);
  NodeId v = out.node(e.dst);
  auto idx = out.arc_index(u, v);
  if (!idx) throw ConfigError("event references unknown link " + e.src + "->" + e.dst);
  Arc& a = out.arc_mut(*idx);
  switch (e.kind) {
    case WanEvent::Kind::kLinkFail:
      a.up = false;
      break;
    case WanEvent::Kind::kLinkRecover:
      a.up = true;
      a.capacity_bps = a.configured_bps;
      break;
    case WanEvent::Kind::kBandwidthChange:
      if (e.new_capacity_bps < 0.0) throw ConfigError("bandwidth change below zero");
      a.capacity_bps = e.new_capacity_bps;
      a.configured_bps = e.new_capacity_bps;
      break;
  }
  return out;
}

bool significant_change(double old_cap, double new_cap, double rho) {
  return std::abs(new_cap - old_cap) / old_cap >= rho;
}

}  // namespace terra
