#ifndef TERRA_CORE_METRICS_HPP
#define TERRA_CORE_METRICS_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace terra {

struct CoflowOutcome {
  std::string id;
  std::string job_id;
  double arrival_s = 0.0;
  double finish_s = -1.0;  // -1: never finished
  double bytes = 0.0;
  std::optional<double> deadline_s;  // relative to arrival
  bool admitted = false;
  bool rejected = false;
};

struct JobOutcome {
  std::string id;
  double arrival_s = 0.0;
  double finish_s = -1.0;
  bool complete = false;
};

// Raw accumulators handed over by a simulation run.
struct RunRecord {
  std::vector<CoflowOutcome> coflows;
  std::vector<JobOutcome> jobs;
  double makespan_s = 0.0;
  double util_ratio_integral = 0.0;  // ∫ (Σ used / Σ cap) dt
  double util_time = 0.0;
  std::map<std::string, double> arc_busy;     // ∫ used_e dt, keyed "A->B"
  std::map<std::string, double> arc_captime;  // ∫ cap_e dt
  int lp_count = 0;
  int rounds = 0;
  int capacity_violations = 0;
  int conservation_violations = 0;
};

struct Metrics {
  std::string policy;
  std::string workload;
  uint64_t seed = 0;

  int coflows = 0;
  int finished = 0;
  int unfinished = 0;
  int jobs = 0;
  int jobs_complete = 0;
  double avg_cct_s = 0.0;
  double p95_cct_s = 0.0;
  double avg_jct_s = 0.0;
  double p95_jct_s = 0.0;
  double utilization = 0.0;
  double makespan_s = 0.0;
  int deadline_total = 0;
  int admitted = 0;
  int rejected = 0;
  int deadline_met = 0;
  double met_fraction = 0.0;
  int lp_count = 0;
  int rounds = 0;
  int capacity_violations = 0;
  int conservation_violations = 0;
  std::map<std::string, double> per_arc_utilization;

  static std::string csv_header();
  std::string csv_row() const;
};

Metrics compute_metrics(const RunRecord& rec);

// Nearest-rank percentile of an unsorted sample; 0 for empty input.
double percentile(std::vector<double> values, double p);

}  // namespace terra

#endif
