#include "core/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace terra {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

double percentile(std::vector<double> values, double p) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  size_t rank = static_cast<size_t>(std::ceil(p * values.size()));
  if (rank == 0) rank = 1;
  return values[rank - 1];
}

Metrics compute_metrics(const RunRecord& rec) {
  Metrics m;
  std::vector<double> ccts, jcts;
  for (const CoflowOutcome& c : rec.coflows) {
    ++m.coflows;
    if (c.deadline_s) {
      ++m.deadline_total;
      if (c.admitted) ++m.admitted;
      if (c.rejected) ++m.rejected;
      if (c.finish_s >= 0.0 && c.finish_s <= c.arrival_s + *c.deadline_s + 1e-6) ++m.deadline_met;
    }
    if (c.rejected) continue;
    if (c.finish_s >= 0.0) {
      ++m.finished;
      ccts.push_back(c.finish_s - c.arrival_s);
    } else {
      ++m.unfinished;
    }
  }
  for (const JobOutcome& j : rec.jobs) {
    ++m.jobs;
    if (j.complete && j.finish_s >= 0.0) {
      ++m.jobs_complete;
      jcts.push_back(j.finish_s - j.arrival_s);
    }
  }
  if (!ccts.empty()) {
    double sum = 0.0;
    for (double v : ccts) sum += v;
    m.avg_cct_s = sum / ccts.size();
    m.p95_cct_s = percentile(ccts, 0.95);
  }
  if (!jcts.empty()) {
    double sum = 0.0;
    for (double v : jcts) sum += v;
    m.avg_jct_s = sum / jcts.size();
    m.p95_jct_s = percentile(jcts, 0.95);
  }
  m.utilization = rec.util_time > 0.0 ? rec.util_ratio_integral / rec.util_time : 0.0;
  m.makespan_s = rec.makespan_s;
  m.met_fraction =
      m.deadline_total > 0 ? static_cast<double>(m.deadline_met) / m.deadline_total : 0.0;
  m.lp_count = rec.lp_count;
  m.rounds = rec.rounds;
  m.capacity_violations = rec.capacity_violations;
  m.conservation_violations = rec.conservation_violations;
  for (const auto& [arc, busy] : rec.arc_busy) {
    auto it = rec.arc_captime.find(arc);
    if (it != rec.arc_captime.end() && it->second > 0.0)
      m.per_arc_utilization[arc] = busy / it->second;
  }
  return m;
}

std::string Metrics::csv_header() {
  return "policy,workload,seed,coflows,finished,unfinished,jobs,jobs_complete,"
         "avg_cct_s,p95_cct_s,avg_jct_s,p95_jct_s,utilization,makespan_s,"
         "deadline_total,admitted,rejected,deadline_met,met_fraction,"
         "lp_count,rounds,capacity_violations,conservation_violations";
}

std::string Metrics::csv_row() const {
  std::ostringstream os;
  os << policy << ',' << workload << ',' << seed << ',' << coflows << ',' << finished << ','
     << unfinished << ',' << jobs << ',' << jobs_complete << ',' << fmt(avg_cct_s) << ','
     << fmt(p95_cct_s) << ',' << fmt(avg_jct_s) << ',' << fmt(p95_jct_s) << ','
     << fmt(utilization) << ',' << fmt(makespan_s) << ',' << deadline_total << ',' << admitted
     << ',' << rejected << ',' << deadline_met << ',' << fmt(met_fraction) << ',' << lp_count
     << ',' << rounds << ',' << capacity_violations << ',' << conservation_violations;
  return os.str();
}

}  // namespace terra
