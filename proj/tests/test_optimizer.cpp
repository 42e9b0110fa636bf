#include <doctest.h>

#include <nlohmann/json.hpp>

#include "core/optimizer.hpp"
#include "core/rng.hpp"
#include "core/units.hpp"
#include "oracles.hpp"

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

WanGraph two_sinks() {
  // B->A at 10 Gbps, C->A at 6 Gbps; nothing else.
  WanGraph g = WanGraph::build({"A", "B", "C"});
  g.add_link("B", "A", gbps_to_bps(10.0), 1e-3);
  g.add_link("C", "A", gbps_to_bps(6.0), 1e-3);
  return g;
}

WanGraph random_connected(Rng& rng, int n, double extra_p) {
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) names.push_back("N" + std::to_string(i));
  WanGraph g = WanGraph::build(names);
  // ring for connectivity, then random chords
  for (int i = 0; i < n; ++i) {
    g.add_link(names[i], names[(i + 1) % n], gbps_to_bps(rng.uniform(2.0, 10.0)), 1e-3);
    g.add_link(names[(i + 1) % n], names[i], gbps_to_bps(rng.uniform(2.0, 10.0)), 1e-3);
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j || (j == (i + 1) % n) || (i == (j + 1) % n)) continue;
      if (rng.uniform01() < extra_p)
        g.add_link(names[i], names[j], gbps_to_bps(rng.uniform(2.0, 10.0)), 1e-3);
    }
  return g;
}

}  // namespace

TEST_CASE("two-group instance drives both links to saturation for 8 seconds") {
  WanGraph g = two_sinks();
  GroupKey ba{g.node("B"), g.node("A")}, ca{g.node("C"), g.node("A")};
  RouteSet routes = RouteSet::k_shortest(g, {ba, ca}, 15);
  std::vector<GroupDemand> groups{{ba, 10e9}, {ca, 6e9}};
  auto sol = min_cct(groups, g, g.effective_capacities(), routes);
  REQUIRE(sol.has_value());
  CHECK(sol->gamma_s == doctest::Approx(8.0).epsilon(1e-9));
  for (const GroupAlloc& ga : sol->groups) {
    double want = ga.key == ba ? gbps_to_bps(10.0) : gbps_to_bps(6.0);
    CHECK(ga.rate_bps == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("single group on the mesh uses both paths for gamma = 2s") {
  WanGraph g = mesh3();
  GroupKey ab{g.node("A"), g.node("B")};
  RouteSet routes = RouteSet::k_shortest(g, {ab}, 15);
  auto sol = min_cct({{ab, 5e9}}, g, g.effective_capacities(), routes);
  REQUIRE(sol.has_value());
  CHECK(sol->gamma_s == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(sol->groups[0].rate_bps == doctest::Approx(gbps_to_bps(20.0)).epsilon(1e-9));
}

TEST_CASE("disconnected endpoints are infeasible, not an error") {
  WanGraph g = two_sinks();
  GroupKey ab{g.node("A"), g.node("B")};  // nothing leaves A
  RouteSet routes = RouteSet::k_shortest(g, {ab}, 15);
  CHECK_FALSE(min_cct({{ab, 1e9}}, g, g.effective_capacities(), routes).has_value());
}

TEST_CASE("decomposition of a two-path allocation") {
  WanGraph g = mesh3();
  NodeId a = g.node("A"), b = g.node("B"), c = g.node("C");
  std::map<int, double> rates{{*g.arc_index(a, b), gbps_to_bps(10.0)},
                              {*g.arc_index(a, c), gbps_to_bps(10.0)},
                              {*g.arc_index(c, b), gbps_to_bps(10.0)}};
  auto paths = decompose_paths(g, rates, a, b);
  REQUIRE(paths.size() == 2);
  CHECK(paths[0].nodes == std::vector<NodeId>{a, b});
  CHECK(paths[0].rate_bps == doctest::Approx(gbps_to_bps(10.0)));
  CHECK(paths[1].nodes == std::vector<NodeId>{a, c, b});
  CHECK(paths[1].rate_bps == doctest::Approx(gbps_to_bps(10.0)));
}

TEST_CASE("single-arc allocation decomposes to that arc") {
  WanGraph g = two_sinks();
  NodeId b = g.node("B"), a = g.node("A");
  auto paths = decompose_paths(g, {{*g.arc_index(b, a), 5.0}}, b, a);
  REQUIRE(paths.size() == 1);
  CHECK(paths[0].rate_bps == doctest::Approx(5.0));
}

TEST_CASE("conservation violations are rejected") {
  WanGraph g = mesh3();
  NodeId a = g.node("A"), b = g.node("B"), c = g.node("C");
  // inflow at C without matching outflow
  std::map<int, double> bad{{*g.arc_index(a, c), 5.0}, {*g.arc_index(c, b), 1.0}};
  CHECK_THROWS_AS(decompose_paths(g, bad, a, b), ConfigError);
}

TEST_CASE("allocation invariants hold on random instances") {
  Rng rng(99);
  for (int iter = 0; iter < 25; ++iter) {
    WanGraph g = random_connected(rng, 5, 0.3);
    std::set<GroupKey> pairs;
    std::map<GroupKey, double> volumes;  // one FlowGroup per (src,dst) pair
    int n_groups = 1 + static_cast<int>(rng.uniform_index(3));
    for (int k = 0; k < n_groups; ++k) {
      NodeId s = static_cast<NodeId>(rng.uniform_index(5));
      NodeId t = static_cast<NodeId>(rng.uniform_index(5));
      if (s == t) t = (t + 1) % 5;
      pairs.insert({s, t});
      volumes[{s, t}] += rng.uniform(1e9, 2e10);
    }
    std::vector<GroupDemand> groups;
    for (const auto& [key, vol] : volumes) groups.push_back({key, vol});
    RouteSet routes = RouteSet::k_shortest(g, pairs, 15);
    auto caps = g.effective_capacities();
    auto sol = min_cct(groups, g, caps, routes);
    REQUIRE(sol.has_value());
    double lambda = 1.0 / sol->gamma_s;

    std::vector<double> used(g.arc_count(), 0.0);
    for (size_t gi = 0; gi < sol->groups.size(); ++gi) {
      const GroupAlloc& ga = sol->groups[gi];
      // source / sink demand at |d| / gamma
      double out = 0.0, in = 0.0;
      std::map<NodeId, double> net;
      for (const auto& [ai, r] : ga.arc_rates) {
        const Arc& arc = g.arc(ai);
        if (arc.src == ga.key.first) out += r;
        if (arc.dst == ga.key.second) in += r;
        net[arc.src] -= r;
        net[arc.dst] += r;
        used[ai] += r;
      }
      double want = 0.0;
      for (const GroupDemand& gd : groups)
        if (gd.key == ga.key) want += gd.volume_bytes * lambda;
      CHECK(out == doctest::Approx(want).epsilon(1e-6));
      CHECK(in == doctest::Approx(want).epsilon(1e-6));
      for (const auto& [node, v] : net) {
        if (node == ga.key.first || node == ga.key.second) continue;
        CHECK(std::abs(v) < 1e-6 * (out + 1.0));
      }
      // path decomposition re-aggregates to the arc matrix
      std::map<int, double> rebuilt;
      double path_sum = 0.0;
      for (const PathRate& p : ga.paths) {
        path_sum += p.rate_bps;
        for (size_t h = 0; h + 1 < p.nodes.size(); ++h)
          rebuilt[*g.arc_index(p.nodes[h], p.nodes[h + 1])] += p.rate_bps;
      }
      CHECK(path_sum == doctest::Approx(out).epsilon(1e-7));
      for (const auto& [ai, r] : ga.arc_rates)
        CHECK(rebuilt[ai] == doctest::Approx(r).epsilon(1e-7));
    }
    for (int ai = 0; ai < g.arc_count(); ++ai)
      CHECK(used[ai] <= caps[ai] * (1.0 + 1e-9) + 1e-3);

    // gamma can never beat the per-group max-flow bound
    for (const GroupDemand& gd : groups) {
      double mf = oracles::max_flow(g, caps, gd.key.first, gd.key.second).value;
      REQUIRE(mf > 0.0);
      CHECK(sol->gamma_s >= gd.volume_bytes / mf - 1e-6);
    }
  }
}

TEST_CASE("single-group gamma equals volume over max-flow") {
  Rng rng(1234);
  for (int iter = 0; iter < 50; ++iter) {
    WanGraph g = random_connected(rng, 3 + static_cast<int>(rng.uniform_index(4)), 0.4);
    NodeId s = 0, t = 1 + static_cast<NodeId>(rng.uniform_index(g.node_count() - 1));
    double volume = rng.uniform(1e9, 5e10);
    RouteSet routes = RouteSet::all_arcs(g, {{s, t}});
    auto caps = g.effective_capacities();
    auto sol = min_cct({{{s, t}, volume}}, g, caps, routes);
    double mf = oracles::max_flow(g, caps, s, t).value;
    REQUIRE(sol.has_value());
    REQUIRE(mf > 0.0);
    CHECK(sol->gamma_s == doctest::Approx(volume / mf).epsilon(1e-6));
  }
}

TEST_CASE("gamma scales linearly in volume and inversely in capacity") {
  Rng rng(555);
  for (int iter = 0; iter < 10; ++iter) {
    WanGraph g = random_connected(rng, 4, 0.4);
    std::set<GroupKey> pairs{{0, 2}, {1, 3}};
    std::vector<GroupDemand> groups{{{0, 2}, rng.uniform(1e9, 1e10)},
                                    {{1, 3}, rng.uniform(1e9, 1e10)}};
    RouteSet routes = RouteSet::k_shortest(g, pairs, 15);
    auto caps = g.effective_capacities();
    auto base = min_cct(groups, g, caps, routes);
    REQUIRE(base.has_value());

    const double c = 3.7;
    std::vector<GroupDemand> scaled_vol = groups;
    for (auto& gd : scaled_vol) gd.volume_bytes *= c;
    auto sv = min_cct(scaled_vol, g, caps, routes);
    REQUIRE(sv.has_value());
    CHECK(sv->gamma_s == doctest::Approx(base->gamma_s * c).epsilon(1e-6));

    std::vector<double> scaled_caps = caps;
    for (double& x : scaled_caps) x *= c;
    auto sc = min_cct(groups, g, scaled_caps, routes);
    REQUIRE(sc.has_value());
    CHECK(sc->gamma_s == doctest::Approx(base->gamma_s / c).epsilon(1e-6));
  }
}

TEST_CASE("max-min filling: shared arc, disjoint arcs, remote bottleneck") {
  SUBCASE("two equal groups on one arc get half each") {
    WanGraph g = WanGraph::build({"A", "B"});
    g.add_link("A", "B", gbps_to_bps(10.0), 1e-3);
    GroupKey ab{g.node("A"), g.node("B")};
    RouteSet routes = RouteSet::k_shortest(g, {ab}, 15);
    McfResult r = max_min_mcf({{ab, 5e9}, {ab, 5e9}}, g, g.effective_capacities(), routes);
    CHECK(r.groups[0].rate_bps == doctest::Approx(gbps_to_bps(5.0)).epsilon(1e-7));
    CHECK(r.groups[1].rate_bps == doctest::Approx(gbps_to_bps(5.0)).epsilon(1e-7));
  }
  SUBCASE("disjoint groups each take their full arc") {
    WanGraph g = WanGraph::build({"A", "B", "C", "D"});
    g.add_link("A", "B", gbps_to_bps(10.0), 1e-3);
    g.add_link("C", "D", gbps_to_bps(10.0), 1e-3);
    GroupKey ab{g.node("A"), g.node("B")}, cd{g.node("C"), g.node("D")};
    RouteSet routes = RouteSet::k_shortest(g, {ab, cd}, 15);
    McfResult r = max_min_mcf({{ab, 4e9}, {cd, 9e9}}, g, g.effective_capacities(), routes);
    CHECK(r.groups[0].rate_bps == doctest::Approx(gbps_to_bps(10.0)).epsilon(1e-7));
    CHECK(r.groups[1].rate_bps == doctest::Approx(gbps_to_bps(10.0)).epsilon(1e-7));
  }
  SUBCASE("a remote 2 Gbps bottleneck leaves 8 Gbps to the other group") {
    WanGraph g = WanGraph::build({"A", "B", "C"});
    g.add_link("A", "B", gbps_to_bps(2.0), 1e-3);   // group 1 bottleneck
    g.add_link("B", "C", gbps_to_bps(10.0), 1e-3);  // shared
    GroupKey ac{g.node("A"), g.node("C")}, bc{g.node("B"), g.node("C")};
    RouteSet routes = RouteSet::k_shortest(g, {ac, bc}, 15);
    McfResult r = max_min_mcf({{ac, 5e9}, {bc, 5e9}}, g, g.effective_capacities(), routes);
    CHECK(r.groups[0].rate_bps == doctest::Approx(gbps_to_bps(2.0)).epsilon(1e-7));
    CHECK(r.groups[1].rate_bps == doctest::Approx(gbps_to_bps(8.0)).epsilon(1e-7));
  }
  SUBCASE("single group reaches the max-flow rate") {
    Rng rng(77);
    WanGraph g = random_connected(rng, 4, 0.3);
    GroupKey key{0, 2};
    RouteSet routes = RouteSet::k_shortest(g, {key}, 50);
    auto caps = g.effective_capacities();
    McfResult r = max_min_mcf({{key, 7e9}}, g, caps, routes);
    double mf = oracles::max_flow(g, caps, 0, 2).value;
    CHECK(r.groups[0].rate_bps == doctest::Approx(mf).epsilon(1e-6));
  }
}
