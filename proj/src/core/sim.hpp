#ifndef TERRA_CORE_SIM_HPP
#define TERRA_CORE_SIM_HPP

#include <memory>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "core/coflow.hpp"
#include "core/metrics.hpp"
#include "core/optimizer.hpp"
#include "core/scheduler.hpp"
#include "core/topology.hpp"
#include "core/workload.hpp"

namespace terra {

struct SimConfig {
  SchedulerConfig sched;
  bool record_trace = true;
};

enum class UnitKind { kFlow, kGroup };

// One fluid transfer the simulator advances: an individual flow for per-flow
// policies, a whole FlowGroup for group-level ones.
struct TransferUnit {
  int idx = -1;
  std::string unit_id;
  std::string coflow_id;
  std::string flow_id;  // empty for group units
  GroupKey key{-1, -1};
  double volume_bytes = 0.0;
  double remaining_bytes = 0.0;
  double delivered_bytes = 0.0;
  std::vector<PathRate> assigned;
  std::vector<PathRate> effective;  // after capacity throttling
  bool bypass = false;
  bool done = false;

  double total_assigned() const;
  double total_effective() const;
};

enum class AdmitDecision { kAccept, kAdmit, kReject };

struct SimCoflow {
  Coflow meta;
  std::string job_id;
  double submit_s = 0.0;
  double finish_s = -1.0;
  bool submitted = false;
  bool rejected = false;
  bool admitted = false;
  UnitKind kind = UnitKind::kFlow;
  std::vector<int> unit_idxs;
  int units_left = 0;
};

struct EventBatch {
  double time = 0.0;
  std::vector<std::string> arrivals;
  std::vector<std::pair<std::string, GroupKey>> groups_finished;
  std::vector<std::string> coflows_finished;
  std::vector<WanEvent> wan_events;
};

class SimCore;

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual UnitKind unit_kind(const SimCore& sim, const Coflow& c) const = 0;
  virtual AdmitDecision admit(SimCore& sim, const SimCoflow& c) {
    (void)sim;
    (void)c;
    return AdmitDecision::kAccept;
  }
  // Recompute rate assignments after an event batch; called with the WAN
  // graph already updated.
  virtual void assign(SimCore& sim, const EventBatch& batch) = 0;
};

struct RunOutput {
  Metrics metrics;
  RunRecord record;
  std::vector<std::string> trace_lines;
  std::vector<std::string> schedule_lines;
};

// Deterministic flow-level simulator: rates are constant between events,
// volumes drain linearly, and every queue pop is ordered by (time, seq).
class SimCore {
 public:
  SimCore(WanGraph topo, Workload wl, std::shared_ptr<Policy> policy, SimConfig cfg,
          uint64_t seed);

  RunOutput run();

  // Policy-facing surface.
  double now() const { return now_; }
  const WanGraph& graph() const { return graph_; }
  const SimConfig& config() const { return cfg_; }
  const std::vector<TransferUnit>& units() const { return units_; }
  const SimCoflow& coflow(const std::string& id) const;
  std::vector<const SimCoflow*> active_coflows() const;  // submitted, unfinished, sorted by id
  const std::vector<int>& units_of(const std::string& coflow_id) const;
  void set_rates(int unit_idx, std::vector<PathRate> paths);
  void clear_rates();
  void add_lp_count(int n) { record_.lp_count += n; }
  void push_schedule_record(const nlohmann::json& rec);

 private:
  struct Queued {
    double time = 0.0;
    uint64_t seq = 0;
    int type = 0;            // 0 arrival, 1 wan, 2 staged-rate apply
    std::string coflow_id;   // arrival
    WanEvent wan;            // wan
    int staged_id = -1;      // staged apply
    bool operator>(const Queued& o) const {
      if (time != o.time) return time > o.time;
      return seq > o.seq;
    }
  };

  void submit(const std::string& coflow_id, EventBatch& batch);
  void finalize_rates(bool assignments_changed);
  void advance_to(double t);
  double next_completion() const;
  void finish_unit(int idx, EventBatch& batch);
  void coflow_finished(const std::string& id, EventBatch& batch);
  void unblock_dependents(const std::string& coflow_id, const std::string& job_id);
  void trace(double t, const std::string& kind, const std::string& coflow,
             const std::string& flow, const std::string& link);
  std::string rates_digest() const;

  WanGraph graph_;
  Workload wl_;
  std::shared_ptr<Policy> policy_;
  SimConfig cfg_;
  uint64_t seed_;

  double now_ = 0.0;
  uint64_t seq_ = 0;
  std::vector<Queued> queue_;  // min-heap by (time, seq)
  std::vector<TransferUnit> units_;
  std::map<std::string, SimCoflow> coflows_;
  std::map<std::string, std::string> coflow_job_;
  std::map<std::string, std::vector<std::string>> dependents_;
  std::map<std::string, int> dep_count_;
  std::map<std::string, double> job_delay_;
  std::vector<double> arc_used_;  // effective, bytes/s
  std::vector<std::map<int, std::vector<PathRate>>> staged_store_;
  RunRecord record_;
  std::vector<std::string> trace_lines_;
  std::vector<std::string> schedule_lines_;
  bool rates_dirty_ = false;
};

// May be called by drivers that replay a run's group-rate timeline to place
// individual flows inside a group: "fair" splits the group rate equally among
// unfinished member flows, "fifo" serves them one at a time in id order. The
// last flow always finishes exactly when the group's volume is drained.
struct RateSegment {
  double t0, t1;
  double rate_bps;
};
std::vector<double> disaggregate_group(const std::vector<RateSegment>& timeline,
                                       const std::vector<double>& flow_volumes,
                                       const std::string& mode);

}  // namespace terra

#endif
