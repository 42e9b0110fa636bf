// Command-line front end: runs policies over topology+workload combinations,
// compares results (factor of improvement vs terra), and sweeps parameters.
// Links the public C API only.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "terra/terra.h"

namespace fs = std::filesystem;

namespace {

int log_level() {
  const char* env = std::getenv("TERRA_LOG");
  if (!env) return 1;
  std::string v = env;
  if (v == "debug") return 2;
  if (v == "quiet" || v == "error") return 0;
  return 1;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[terra] " << msg << "\n";
}
void log_debug(const std::string& msg) {
  if (log_level() >= 2) std::cerr << "[terra:debug] " << msg << "\n";
}

struct Handles {
  terra_topology* topo = nullptr;
  terra_workload* wl = nullptr;
  ~Handles() {
    if (topo) terra_topology_free(topo);
    if (wl) terra_workload_free(wl);
  }
};

struct RunOptions {
  std::string topology_path;
  std::string workload_path;
  std::string generate_path;
  std::string scenario;
  std::vector<std::string> policies;
  std::vector<uint64_t> seeds;
  std::string out_dir = "terra-out";
  std::optional<double> alpha, rho, eta, bypass_bytes, decision_delay;
  std::optional<int> k;
  bool no_trace = false;
};

void add_common_options(CLI::App* cmd, RunOptions& opt) {
  cmd->add_option("--topology", opt.topology_path, "topology JSON document");
  cmd->add_option("--workload", opt.workload_path, "workload JSON document");
  cmd->add_option("--generate", opt.generate_path, "generator spec JSON document");
  cmd->add_option("--scenario", opt.scenario, "builtin scenario: figure1|figure2|flowgroup");
  cmd->add_option("--policy", opt.policies,
                  "policy to run (repeatable): terra|perflow|multipath|varys|swan_mcf");
  cmd->add_option("--seed", opt.seeds, "rng seed (repeatable)");
  cmd->add_option("--out", opt.out_dir, "output directory");
  cmd->add_option("--alpha", opt.alpha, "starvation share in [0,1)");
  cmd->add_option("--rho", opt.rho, "significant bandwidth-change threshold");
  cmd->add_option("--eta", opt.eta, "deadline admission relaxation (>1)");
  cmd->add_option("--k", opt.k, "candidate paths per datacenter pair");
  cmd->add_option("--bypass-bytes", opt.bypass_bytes, "central-scheduling bypass threshold");
  cmd->add_option("--decision-delay", opt.decision_delay, "control-plane delay in seconds");
  cmd->add_flag("--no-trace", opt.no_trace, "skip writing event traces");
}

[[noreturn]] void die(int code, const std::string& msg) {
  std::cerr << "terra: " << msg << "\n";
  std::exit(code);
}

void apply_overrides(terra_config& cfg, const RunOptions& opt) {
  if (opt.alpha) cfg.alpha = *opt.alpha;
  if (opt.rho) cfg.rho = *opt.rho;
  if (opt.eta) cfg.eta = *opt.eta;
  if (opt.k) cfg.path_count = *opt.k;
  if (opt.bypass_bytes) cfg.min_volume_bytes = *opt.bypass_bytes;
  if (opt.decision_delay) cfg.decision_delay_s = *opt.decision_delay;
  cfg.record_trace = opt.no_trace ? 0 : 1;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) die(2, "cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Loads topology+workload per options; fills cfg with scenario presets when a
// scenario is requested, then applies explicit flag overrides.
void load_inputs(const RunOptions& opt, Handles& h, terra_config& cfg, std::string& wl_name,
                 uint64_t gen_seed) {
  terra_config_defaults(&cfg);
  if (!opt.scenario.empty()) {
    if (terra_scenario(opt.scenario.c_str(), &h.topo, &h.wl, &cfg) != TERRA_OK)
      die(2, terra_last_error());
    wl_name = opt.scenario;
  } else {
    if (opt.topology_path.empty()) die(2, "either --scenario or --topology is required");
    if (terra_topology_load_file(opt.topology_path.c_str(), &h.topo) != TERRA_OK)
      die(2, terra_last_error());
    if (!opt.workload_path.empty()) {
      if (terra_workload_load_file(opt.workload_path.c_str(), &h.wl) != TERRA_OK)
        die(2, terra_last_error());
      wl_name = fs::path(opt.workload_path).stem().string();
    } else if (!opt.generate_path.empty()) {
      std::string spec = read_file(opt.generate_path);
      if (terra_workload_generate(spec.c_str(), h.topo, gen_seed, &h.wl) != TERRA_OK)
        die(2, terra_last_error());
      wl_name = fs::path(opt.generate_path).stem().string();
    } else {
      die(2, "either --workload or --generate is required with --topology");
    }
  }
  apply_overrides(cfg, opt);
}

struct RunTask {
  std::string policy;
  uint64_t seed;
  std::string csv_row;
  std::vector<char> trace_ok;
};

int cmd_run(RunOptions& opt) {
  if (opt.policies.empty()) opt.policies = {"terra", "perflow", "multipath", "varys", "swan_mcf"};
  if (opt.seeds.empty()) opt.seeds = {1};

  fs::create_directories(opt.out_dir);
  std::ofstream metrics(fs::path(opt.out_dir) / "metrics.csv", std::ios::binary);
  if (!metrics) die(2, "cannot write to " + opt.out_dir);
  metrics << terra_metrics_csv_header() << "\n";

  for (uint64_t seed : opt.seeds) {
    Handles h;
    terra_config cfg;
    std::string wl_name;
    load_inputs(opt, h, cfg, wl_name, seed);
    for (const std::string& policy : opt.policies) {
      terra_result* res = nullptr;
      terra_status st = terra_run(h.topo, h.wl, policy.c_str(), &cfg, seed, &res);
      if (st == TERRA_EPOLICY) die(2, terra_last_error());
      if (st != TERRA_OK) die(1, terra_last_error());
      char* row = nullptr;
      terra_result_csv_row(res, wl_name.c_str(), &row);
      metrics << row << "\n";
      terra_string_free(row);
      if (!opt.no_trace) {
        std::string base = policy + "-" + std::to_string(seed);
        fs::path trace = fs::path(opt.out_dir) / ("trace-" + base + ".jsonl");
        if (terra_result_write_trace(res, trace.string().c_str()) != TERRA_OK)
          die(1, terra_last_error());
        if (policy == "terra") {
          fs::path sched = fs::path(opt.out_dir) / ("schedule-" + base + ".jsonl");
          if (terra_result_write_schedule_trace(res, sched.string().c_str()) != TERRA_OK)
            die(1, terra_last_error());
        }
      }
      double avg = 0.0;
      terra_result_metric(res, "avg_cct_s", &avg);
      log_info(policy + " seed=" + std::to_string(seed) + " avg_cct=" + std::to_string(avg));
      terra_result_free(res);
    }
  }
  log_info("wrote " + (fs::path(opt.out_dir) / "metrics.csv").string());
  return 0;
}

std::vector<std::map<std::string, std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) die(2, "cannot read " + path.string());
  std::string header;
  if (!std::getline(in, header)) die(2, "empty csv: " + path.string());
  std::vector<std::string> cols;
  std::stringstream hs(header);
  std::string cell;
  while (std::getline(hs, cell, ',')) cols.push_back(cell);
  std::vector<std::map<std::string, std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::map<std::string, std::string> row;
    for (const std::string& c : cols) {
      if (!std::getline(ls, cell, ',')) cell = "";
      row[c] = cell;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

int cmd_compare(const std::string& results_dir) {
  auto rows = read_csv(fs::path(results_dir) / "metrics.csv");
  // (workload, seed) -> policy -> (avg_cct, avg_jct)
  std::map<std::pair<std::string, std::string>, std::map<std::string, std::pair<double, double>>>
      table;
  for (auto& row : rows) {
    table[{row["workload"], row["seed"]}][row["policy"]] = {std::stod(row["avg_cct_s"]),
                                                            std::stod(row["avg_jct_s"])};
  }
  std::map<std::string, std::pair<double, int>> foi_cct, foi_jct;
  for (auto& [key, policies] : table) {
    auto terra_it = policies.find("terra");
    if (terra_it == policies.end()) die(2, "metrics.csv has no terra rows for FoI");
    for (auto& [policy, vals] : policies) {
      if (policy == "terra") continue;
      if (terra_it->second.first > 0.0) {
        foi_cct[policy].first += vals.first / terra_it->second.first;
        foi_cct[policy].second += 1;
      }
      if (terra_it->second.second > 0.0) {
        foi_jct[policy].first += vals.second / terra_it->second.second;
        foi_jct[policy].second += 1;
      }
    }
  }
  std::ofstream out(fs::path(results_dir) / "foi.csv", std::ios::binary);
  out << "policy,foi_avg_cct,foi_avg_jct,runs\n";
  std::printf("%-12s %12s %12s %6s\n", "policy", "FoI(avgCCT)", "FoI(avgJCT)", "runs");
  for (auto& [policy, acc] : foi_cct) {
    double cct = acc.second ? acc.first / acc.second : 0.0;
    double jct = foi_jct[policy].second ? foi_jct[policy].first / foi_jct[policy].second : 0.0;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%s,%.6g,%.6g,%d", policy.c_str(), cct, jct, acc.second);
    out << buf << "\n";
    std::printf("%-12s %12.3f %12.3f %6d\n", policy.c_str(), cct, jct, acc.second);
  }
  return 0;
}

int cmd_sweep(RunOptions& opt, const std::string& param, const std::vector<double>& values) {
  if (opt.policies.empty()) opt.policies = {"terra", "perflow"};
  if (opt.seeds.empty()) opt.seeds = {1};
  fs::create_directories(opt.out_dir);
  std::ofstream out(fs::path(opt.out_dir) / ("sweep-" + param + ".csv"), std::ios::binary);
  out << "param,value," << terra_metrics_csv_header() << "\n";

  struct Job {
    double value;
    std::string policy;
    uint64_t seed;
  };
  std::vector<Job> jobs;
  for (double v : values)
    for (const std::string& p : opt.policies)
      for (uint64_t s : opt.seeds) jobs.push_back({v, p, s});

  std::vector<std::string> results(jobs.size());
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  for (size_t base = 0; base < jobs.size(); base += workers) {
    size_t end = std::min(jobs.size(), base + workers);
    std::vector<std::future<std::string>> futs;
    for (size_t i = base; i < end; ++i) {
      futs.push_back(std::async(std::launch::async, [&opt, &param, &jobs, i]() -> std::string {
        const Job& job = jobs[i];
        Handles h;
        terra_config cfg;
        std::string wl_name;
        if (param == "arrival_scale") {
          if (opt.topology_path.empty() || opt.generate_path.empty())
            die(2, "arrival_scale sweeps need --topology and --generate");
          terra_config_defaults(&cfg);
          if (terra_topology_load_file(opt.topology_path.c_str(), &h.topo) != TERRA_OK)
            die(2, terra_last_error());
          nlohmann::json spec = nlohmann::json::parse(read_file(opt.generate_path), nullptr, false);
          if (spec.is_discarded() || !spec.contains("arrival") ||
              !spec["arrival"].contains("rate_per_s"))
            die(2, "generator spec lacks arrival.rate_per_s");
          spec["arrival"]["rate_per_s"] = spec["arrival"]["rate_per_s"].get<double>() * job.value;
          std::string patched = spec.dump();
          if (terra_workload_generate(patched.c_str(), h.topo, job.seed, &h.wl) != TERRA_OK)
            die(2, terra_last_error());
          wl_name = fs::path(opt.generate_path).stem().string();
          apply_overrides(cfg, opt);
        } else {
          load_inputs(opt, h, cfg, wl_name, job.seed);
          if (param == "k")
            cfg.path_count = static_cast<int>(job.value);
          else if (param == "alpha")
            cfg.alpha = job.value;
          else if (param == "rho")
            cfg.rho = job.value;
          else if (param == "eta")
            cfg.eta = job.value;
          else
            die(2, "unknown sweep parameter: " + param);
        }
        cfg.record_trace = 0;
        terra_result* res = nullptr;
        terra_status st = terra_run(h.topo, h.wl, job.policy.c_str(), &cfg, job.seed, &res);
        if (st == TERRA_EPOLICY) die(2, terra_last_error());
        if (st != TERRA_OK) die(1, terra_last_error());
        char* row = nullptr;
        terra_result_csv_row(res, wl_name.c_str(), &row);
        std::string line = row;
        terra_string_free(row);
        terra_result_free(res);
        char prefix[64];
        std::snprintf(prefix, sizeof(prefix), "%s,%.9g,", param.c_str(), job.value);
        return prefix + line;
      }));
    }
    for (size_t i = base; i < end; ++i) results[i] = futs[i - base].get();
  }
  for (const std::string& line : results) out << line << "\n";
  log_info("wrote sweep-" + param + ".csv");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"terra: coflow scheduling and multipath WAN routing simulator"};
  app.require_subcommand(1);

  RunOptions run_opt;
  CLI::App* run = app.add_subcommand("run", "simulate policies over a workload");
  add_common_options(run, run_opt);

  std::string results_dir;
  CLI::App* compare = app.add_subcommand("compare", "factor-of-improvement table vs terra");
  compare->add_option("results", results_dir, "directory containing metrics.csv")->required();

  RunOptions sweep_opt;
  std::string sweep_param;
  std::vector<double> sweep_values;
  CLI::App* sweep = app.add_subcommand("sweep", "re-run while varying one parameter");
  add_common_options(sweep, sweep_opt);
  sweep->add_option("--param", sweep_param, "k|alpha|rho|eta|arrival_scale")->required();
  sweep->add_option("--values", sweep_values, "values to sweep")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_opt);
    if (compare->parsed()) return cmd_compare(results_dir);
    if (sweep->parsed()) return cmd_sweep(sweep_opt, sweep_param, sweep_values);
  } catch (const std::exception& e) {
    die(1, e.what());
  }
  return 0;
}
