#include <doctest.h>

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "terra/terra.h"

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

struct TmpDir {
  fs::path path;
  TmpDir() {
    path = fs::temp_directory_path() / ("terra_capi_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TmpDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("scenario handles run end to end through the C surface") {
  terra_topology* topo = nullptr;
  terra_workload* wl = nullptr;
  terra_config cfg;
  REQUIRE(terra_scenario("figure1", &topo, &wl, &cfg) == TERRA_OK);
  REQUIRE(topo != nullptr);
  REQUIRE(wl != nullptr);
  CHECK(cfg.alpha == 0.0);

  terra_result* res = nullptr;
  REQUIRE(terra_run(topo, wl, "perflow", &cfg, 1, &res) == TERRA_OK);
  double avg = 0.0;
  REQUIRE(terra_result_metric(res, "avg_cct_s", &avg) == TERRA_OK);
  CHECK(avg == doctest::Approx(14.0));

  double bogus;
  CHECK(terra_result_metric(res, "not_a_metric", &bogus) == TERRA_EINVAL);
  CHECK(std::string(terra_last_error()).find("unknown metric") != std::string::npos);

  char* row = nullptr;
  REQUIRE(terra_result_csv_row(res, "figure1", &row) == TERRA_OK);
  std::string header = terra_metrics_csv_header();
  CHECK(std::string(row).find("perflow,figure1,1,") == 0);
  CHECK(header.find("avg_cct_s") != std::string::npos);
  terra_string_free(row);

  TmpDir tmp;
  fs::path trace = tmp.path / "trace.jsonl";
  REQUIRE(terra_result_write_trace(res, trace.string().c_str()) == TERRA_OK);
  CHECK(slurp(trace).find("\"kind\":\"arrival\"") != std::string::npos);

  terra_result_free(res);
  terra_workload_free(wl);
  terra_topology_free(topo);
}

TEST_CASE("terra runs emit a schedule trace; baselines do not") {
  terra_topology* topo = nullptr;
  terra_workload* wl = nullptr;
  terra_config cfg;
  REQUIRE(terra_scenario("figure2", &topo, &wl, &cfg) == TERRA_OK);
  terra_result* res = nullptr;
  REQUIRE(terra_run(topo, wl, "terra", &cfg, 1, &res) == TERRA_OK);
  TmpDir tmp;
  fs::path sched = tmp.path / "schedule.jsonl";
  REQUIRE(terra_result_write_schedule_trace(res, sched.string().c_str()) == TERRA_OK);
  std::string text = slurp(sched);
  CHECK(text.find("\"trigger\"") != std::string::npos);
  CHECK(text.find("\"gamma_s\"") != std::string::npos);
  terra_result_free(res);

  terra_result* base = nullptr;
  REQUIRE(terra_run(topo, wl, "varys", &cfg, 1, &base) == TERRA_OK);
  fs::path empty = tmp.path / "empty.jsonl";
  REQUIRE(terra_result_write_schedule_trace(base, empty.string().c_str()) == TERRA_OK);
  CHECK(slurp(empty).empty());
  terra_result_free(base);
  terra_workload_free(wl);
  terra_topology_free(topo);
}

TEST_CASE("error paths set codes and messages") {
  terra_topology* topo = nullptr;
  CHECK(terra_topology_load_json("{not json", &topo) != TERRA_OK);
  CHECK(terra_topology_load_json("{\"nodes\":[\"A\"]}", &topo) == TERRA_EINVAL);
  CHECK(std::string(terra_last_error()).size() > 0);

  terra_workload* wl = nullptr;
  terra_config cfg;
  REQUIRE(terra_scenario("figure1", &topo, &wl, &cfg) == TERRA_OK);
  terra_result* res = nullptr;
  CHECK(terra_run(topo, wl, "fancy_policy", &cfg, 1, &res) == TERRA_EPOLICY);
  CHECK(terra_scenario("figure9", &topo, &wl, nullptr) == TERRA_EINVAL);
  terra_workload_free(wl);
  terra_topology_free(topo);
  CHECK(terra_run(nullptr, nullptr, "terra", nullptr, 1, nullptr) == TERRA_EINVAL);
}

TEST_CASE("workload generation through the C surface is deterministic") {
  const char* topo_json =
      "{\"nodes\":[\"A\",\"B\",\"C\"],"
      "\"links\":[{\"src\":\"A\",\"dst\":\"B\",\"gbps\":10,\"bidirectional\":true},"
      "{\"src\":\"B\",\"dst\":\"C\",\"gbps\":10,\"bidirectional\":true}]}";
  terra_topology* topo = nullptr;
  REQUIRE(terra_topology_load_json(topo_json, &topo) == TERRA_OK);
  const char* spec =
      "{\"jobs\":5,\"arrival\":{\"kind\":\"poisson\",\"rate_per_s\":0.5},"
      "\"volume\":{\"kind\":\"uniform\",\"min_gb\":1,\"max_gb\":2},"
      "\"mappers\":2,\"reducers\":1}";
  terra_workload* w1 = nullptr;
  terra_workload* w2 = nullptr;
  REQUIRE(terra_workload_generate(spec, topo, 99, &w1) == TERRA_OK);
  REQUIRE(terra_workload_generate(spec, topo, 99, &w2) == TERRA_OK);
  char* j1 = nullptr;
  char* j2 = nullptr;
  REQUIRE(terra_workload_to_json(w1, &j1) == TERRA_OK);
  REQUIRE(terra_workload_to_json(w2, &j2) == TERRA_OK);
  CHECK(std::string(j1) == std::string(j2));
  terra_string_free(j1);
  terra_string_free(j2);
  terra_workload_free(w1);
  terra_workload_free(w2);
  terra_topology_free(topo);
}
