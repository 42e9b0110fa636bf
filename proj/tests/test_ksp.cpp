#include <doctest.h>

#include <set>

#include <nlohmann/json.hpp>

#include "core/ksp.hpp"
#include "core/rng.hpp"
#include "core/topology.hpp"
#include "core/units.hpp"

using namespace terra;

namespace {

WanGraph mesh3() {
  nlohmann::json doc{
      {"nodes", {"A", "B", "C"}},
      {"links",
       {{{"src", "A"}, {"dst", "B"}, {"gbps", 10.0}, {"latency_ms", 1.0}, {"bidirectional", true}},
        {{"src", "A"}, {"dst", "C"}, {"gbps", 10.0}, {"latency_ms", 1.0}, {"bidirectional", true}},
        {{"src", "B"}, {"dst", "C"}, {"gbps", 10.0}, {"latency_ms", 1.0}, {"bidirectional", true}}}}};
  return load_topology(doc);
}

WanGraph random_graph(Rng& rng, int n, double p) {
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) names.push_back("N" + std::to_string(i));
  WanGraph g = WanGraph::build(names);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (rng.uniform01() < p)
        g.add_link(names[i], names[j], gbps_to_bps(rng.uniform(1.0, 10.0)),
                   1e-3 * rng.uniform(1.0, 5.0));
    }
  return g;
}

}  // namespace

TEST_CASE("full mesh has exactly two simple paths per pair") {
  WanGraph g = mesh3();
  auto paths = k_shortest_paths(g, g.node("A"), g.node("B"), 15);
  REQUIRE(paths.size() == 2);
  CHECK(paths[0].nodes == std::vector<NodeId>{g.node("A"), g.node("B")});
  CHECK(paths[1].nodes == std::vector<NodeId>{g.node("A"), g.node("C"), g.node("B")});

  auto one = k_shortest_paths(g, g.node("A"), g.node("B"), 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].nodes == paths[0].nodes);
}

TEST_CASE("disconnection yields an empty list") {
  nlohmann::json doc{{"nodes", {"A", "B", "C"}},
                     {"links",
                      {{{"src", "A"}, {"dst", "B"}, {"gbps", 1.0}, {"latency_ms", 1.0}},
                       {{"src", "B"}, {"dst", "C"}, {"gbps", 1.0}, {"latency_ms", 1.0}}}}};
  WanGraph g = load_topology(doc);
  WanGraph g2 = apply_event(g, WanEvent{0, WanEvent::Kind::kLinkFail, "B", "C", 0, 0});
  CHECK(k_shortest_paths(g2, g2.node("A"), g2.node("C"), 5).empty());
}

TEST_CASE("paths are simple, ordered and prefix-stable") {
  Rng rng(7);
  for (int iter = 0; iter < 30; ++iter) {
    WanGraph g = random_graph(rng, 5, 0.5);
    for (NodeId u = 0; u < g.node_count(); ++u)
      for (NodeId v = 0; v < g.node_count(); ++v) {
        if (u == v) continue;
        auto big = k_shortest_paths(g, u, v, 10);
        auto small = k_shortest_paths(g, u, v, 3);
        REQUIRE(small.size() == std::min<size_t>(3, big.size()));
        for (size_t i = 0; i < small.size(); ++i) CHECK(small[i].nodes == big[i].nodes);
        for (size_t i = 0; i < big.size(); ++i) {
          std::set<NodeId> seen(big[i].nodes.begin(), big[i].nodes.end());
          CHECK(seen.size() == big[i].nodes.size());  // simple
          if (i > 0) CHECK(big[i - 1].distance <= big[i].distance + 1e-12);
          for (size_t h = 0; h + 1 < big[i].nodes.size(); ++h) {
            auto ai = g.arc_index(big[i].nodes[h], big[i].nodes[h + 1]);
            REQUIRE(ai.has_value());
            CHECK(g.arc(*ai).up);
          }
        }
      }
  }
}

TEST_CASE("ties break by hops then lexicographic sequence") {
  // Two equally long routes; the two-hop one must come after the direct one,
  // and among equal-length two-hop routes the smaller middle node wins.
  nlohmann::json doc{
      {"nodes", {"A", "B", "M", "N"}},
      {"links",
       {{{"src", "A"}, {"dst", "B"}, {"gbps", 1.0}, {"latency_ms", 2.0}},
        {{"src", "A"}, {"dst", "M"}, {"gbps", 1.0}, {"latency_ms", 1.0}},
        {{"src", "M"}, {"dst", "B"}, {"gbps", 1.0}, {"latency_ms", 1.0}},
        {{"src", "A"}, {"dst", "N"}, {"gbps", 1.0}, {"latency_ms", 1.0}},
        {{"src", "N"}, {"dst", "B"}, {"gbps", 1.0}, {"latency_ms", 1.0}}}}};
  WanGraph g = load_topology(doc);
  auto paths = k_shortest_paths(g, g.node("A"), g.node("B"), 3);
  REQUIRE(paths.size() == 3);
  CHECK(paths[0].nodes == std::vector<NodeId>{g.node("A"), g.node("B")});
  CHECK(paths[1].nodes == std::vector<NodeId>{g.node("A"), g.node("M"), g.node("B")});
  CHECK(paths[2].nodes == std::vector<NodeId>{g.node("A"), g.node("N"), g.node("B")});
}
