#include "core/scenarios.hpp"

namespace terra {

namespace {

nlohmann::json mesh3_topology() {
  return nlohmann::json{
      {"nodes", {"A", "B", "C"}},
      {"links",
       {
           {{"src", "A"}, {"dst", "B"}, {"gbps", 10.0}, {"latency_ms", 1.0}, {"bidirectional", true}},
           {{"src", "A"}, {"dst", "C"}, {"gbps", 10.0}, {"latency_ms", 1.0}, {"bidirectional", true}},
           {{"src", "B"}, {"dst", "C"}, {"gbps", 10.0}, {"latency_ms", 1.0}, {"bidirectional", true}},
       }}};
}

nlohmann::json flow(const std::string& id, const std::string& src, const std::string& dst,
                    double gb) {
  return nlohmann::json{{"id", id}, {"src", src}, {"dst", dst},
                        {"bytes", static_cast<int64_t>(gb * 1e9)}};
}

}  // namespace

nlohmann::json swan_like_topology() {
  auto link = [](const char* a, const char* b, double ms) {
    return nlohmann::json{{"src", a},         {"dst", b},          {"gbps", 10.0},
                          {"latency_ms", ms}, {"bidirectional", true}};
  };
  return nlohmann::json{{"nodes", {"DC1", "DC2", "DC3", "DC4", "DC5"}},
                        {"links",
                         {link("DC1", "DC2", 1.0), link("DC1", "DC3", 2.0),
                          link("DC2", "DC3", 1.0), link("DC2", "DC4", 2.0),
                          link("DC3", "DC4", 1.0), link("DC3", "DC5", 2.0),
                          link("DC4", "DC5", 1.0)}}};
}

Scenario builtin_scenario(const std::string& name) {
  Scenario s;
  s.name = name;
  s.cfg = SchedulerConfig{};
  if (name == "figure1") {
    s.topology = mesh3_topology();
    s.workload = nlohmann::json{
        {"jobs",
         {
             {{"id", "job1"},
              {"arrival_s", 0.0},
              {"coflows",
               {{{"id", "c1"}, {"flows", {flow("f11", "A", "B", 5.0)}}}}}},
             {{"id", "job2"},
              {"arrival_s", 0.0},
              {"coflows",
               {{{"id", "c2"},
                 {"flows", {flow("f21", "A", "B", 5.0), flow("f22", "C", "B", 25.0)}}}}}},
         }}};
    s.cfg.alpha = 0.0;  // regression baselines assume no reserve
  } else if (name == "figure2") {
    s.topology = mesh3_topology();
    s.workload = nlohmann::json{
        {"jobs",
         {
             {{"id", "job3"},
              {"arrival_s", 0.0},
              {"coflows",
               {{{"id", "c3"}, {"flows", {flow("f31", "A", "B", 10.0)}}}}}},
             {{"id", "job4"},
              {"arrival_s", 0.0},
              {"coflows",
               {{{"id", "c4"},
                 {"flows", {flow("f41", "C", "B", 15.0), flow("f42", "A", "C", 15.0)}}}}}},
         }},
        {"wan_events",
         {
             {{"t_s", 0.001}, {"kind", "fail"}, {"src", "A"}, {"dst", "C"}},
             {{"t_s", 0.001}, {"kind", "fail"}, {"src", "C"}, {"dst", "A"}},
         }}};
    s.cfg.alpha = 0.0;
  } else if (name == "flowgroup") {
    // 16 flows, two (src,dst) pairs; link capacities sized so both stay busy
    // for the whole transfer.
    s.topology = nlohmann::json{
        {"nodes", {"A", "B", "C"}},
        {"links",
         {
             {{"src", "B"}, {"dst", "A"}, {"gbps", 10.0}, {"latency_ms", 1.0}},
             {{"src", "C"}, {"dst", "A"}, {"gbps", 6.0}, {"latency_ms", 1.0}},
         }}};
    nlohmann::json flows = nlohmann::json::array();
    for (int i = 0; i < 10; ++i) flows.push_back(flow("b" + std::to_string(i), "B", "A", 1.0));
    for (int i = 0; i < 6; ++i) flows.push_back(flow("c" + std::to_string(i), "C", "A", 1.0));
    s.workload = nlohmann::json{
        {"jobs",
         {{{"id", "job1"},
           {"arrival_s", 0.0},
           {"coflows", {{{"id", "shuffle"}, {"flows", flows}}}}}}}};
    s.cfg.alpha = 0.0;
  } else {
    throw ConfigError("unknown scenario: " + name);
  }
  return s;
}

std::vector<std::string> scenario_names() { return {"figure1", "figure2", "flowgroup"}; }

}  // namespace terra
