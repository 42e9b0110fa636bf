#include "core/coflow.hpp"

#include <set>

#include <nlohmann/json.hpp>

namespace terra {

int64_t Coflow::total_bytes() const {
  int64_t sum = 0;
  for (const auto& [key, g] : groups) sum += g.volume_bytes;
  return sum;
}

std::map<GroupKey, FlowGroup> group_flows(const std::vector<Flow>& flows) {
  std::map<GroupKey, FlowGroup> groups;
  for (const Flow& f : flows) {
    if (f.src == f.dst)
      throw ConfigError("flow " + f.id + " has identical src and dst datacenters");
    if (f.volume_bytes <= 0) throw ConfigError("flow " + f.id + " has non-positive volume");
    FlowGroup& g = groups[{f.src, f.dst}];
    g.src = f.src;
    g.dst = f.dst;
    g.volume_bytes += f.volume_bytes;
    g.flow_ids.push_back(f.id);
  }
  return groups;
}

void update_coflow(Coflow& c, const std::vector<Flow>& new_flows) {
  if (c.state == CoflowState::kFinished || c.state == CoflowState::kRejected)
    throw ConfigError("coflow " + c.id + " can no longer be updated");
  std::set<std::string> known;
  for (const Flow& f : c.flows) known.insert(f.id);
  for (const Flow& f : new_flows) {
    if (!known.insert(f.id).second)
      throw ConfigError("duplicate flow id " + f.id + " in coflow " + c.id);
  }
  auto merged = group_flows(new_flows);  // validates src/dst/volume
  for (const Flow& f : new_flows) c.flows.push_back(f);
  for (auto& [key, g] : merged) {
    FlowGroup& dst = c.groups[key];
    dst.src = g.src;
    dst.dst = g.dst;
    dst.volume_bytes += g.volume_bytes;
    for (auto& id : g.flow_ids) dst.flow_ids.push_back(id);
  }
}

Coflow coflow_from_json(const nlohmann::json& doc, const WanGraph& g) {
  Coflow c;
  if (!doc.contains("id") || !doc.contains("flows"))
    throw ConfigError("coflow document needs 'id' and 'flows'");
  c.id = doc.at("id").is_string() ? doc.at("id").get<std::string>()
                                  : std::to_string(doc.at("id").get<int64_t>());
  c.arrival_s = doc.value("arrival_s", 0.0);
  if (doc.contains("deadline_s")) {
    double d = doc.at("deadline_s").get<double>();
    if (d <= 0.0) throw ConfigError("coflow " + c.id + " has non-positive deadline");
    c.deadline_s = d;
  }
  for (const auto& fj : doc.at("flows")) {
    Flow f;
    f.id = fj.at("id").is_string() ? fj.at("id").get<std::string>()
                                   : std::to_string(fj.at("id").get<int64_t>());
    f.src = g.node(fj.at("src").get<std::string>());
    f.dst = g.node(fj.at("dst").get<std::string>());
    f.volume_bytes = fj.at("bytes").get<int64_t>();
    if (f.volume_bytes <= 0) throw ConfigError("flow " + f.id + " has non-positive volume");
    c.flows.push_back(std::move(f));
  }
  if (c.flows.empty()) throw ConfigError("coflow " + c.id + " has no flows");
  std::set<std::string> ids;
  for (const Flow& f : c.flows)
    if (!ids.insert(f.id).second) throw ConfigError("duplicate flow id " + f.id);
  c.groups = group_flows(c.flows);
  return c;
}

}  // namespace terra
