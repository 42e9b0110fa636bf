#ifndef TERRA_CORE_WORKLOAD_HPP
#define TERRA_CORE_WORKLOAD_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "core/topology.hpp"

namespace terra {

struct FlowSpec {
  std::string id;
  std::string src, dst;  // datacenter names, resolved at simulation start
  int64_t bytes = 0;
};

struct CoflowSpec {
  std::string id;
  std::vector<std::string> deps;  // coflow ids within the same job
  std::optional<double> deadline_s;
  std::vector<FlowSpec> flows;
};

struct JobSpec {
  std::string id;
  double arrival_s = 0.0;
  double compute_delay_s = 0.0;  // gap between dependent stages
  std::vector<CoflowSpec> coflows;
};

struct WanEventSpec {
  double t_s = 0.0;
  std::string kind;  // fail | recover | bandwidth
  std::string src, dst;
  double gbps = 0.0;  // bandwidth only
};

struct Workload {
  std::vector<JobSpec> jobs;
  std::vector<WanEventSpec> wan_events;
  nlohmann::json meta;

  nlohmann::json to_json() const;
};

// Workload document:
//   {jobs:[{id, arrival_s, coflows:[{id, deps:[...], deadline_s?, flows:[...]}]}],
//    wan_events?:[{t_s,kind,src,dst,gbps?}]}
// Validates structure: acyclic deps, positive volumes, unique ids.
Workload load_workload(const nlohmann::json& doc);
Workload load_workload_file(const std::string& path);

// Generator spec:
//   {jobs:int,
//    arrival:{kind:"poisson",rate_per_s} | {kind:"times",times:[..]} | {kind:"all_at",t},
//    volume:{kind:"uniform",min_gb,max_gb} | {kind:"pareto",alpha,min_gb}
//           | {kind:"lognormal",mu_gb,sigma},
//    mappers:int|[lo,hi], reducers:int|[lo,hi],
//    spread?:int, deadline_multiplier?:d, chain?:{min,max}, compute_delay_s?:x}
// Deterministic in (spec, topology, seed). Deadlines are d x the coflow's
// minimum completion time on the empty unscaled topology.
Workload generate_workload(const nlohmann::json& gen_spec, const WanGraph& topo, uint64_t seed);

}  // namespace terra

#endif
