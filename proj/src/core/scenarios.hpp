#ifndef TERRA_CORE_SCENARIOS_HPP
#define TERRA_CORE_SCENARIOS_HPP

#include <string>

#include <nlohmann/json.hpp>

#include "core/scheduler.hpp"

namespace terra {

struct Scenario {
  std::string name;
  nlohmann::json topology;
  nlohmann::json workload;
  SchedulerConfig cfg;  // scenario presets (alpha etc.)
};

// figure1: two jobs on a 3-datacenter mesh, contention on one link.
// figure2: two coflows hit by a link failure right after scheduling.
// flowgroup: one 16-flow coflow coalescing into two FlowGroups.
Scenario builtin_scenario(const std::string& name);
std::vector<std::string> scenario_names();

// 5-datacenter, 7-bidirectional-link topology used by the statistical suites.
nlohmann::json swan_like_topology();

}  // namespace terra

#endif
