#ifndef TERRA_CORE_SCHEDULER_HPP
#define TERRA_CORE_SCHEDULER_HPP

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "core/coflow.hpp"
#include "core/optimizer.hpp"
#include "core/topology.hpp"

namespace terra {

struct SchedulerConfig {
  double alpha = 0.1;  // starvation share kept back for preempted coflows
  double rho = 0.25;   // significant bandwidth-change threshold
  double eta = 1.1;    // deadline admission relaxation (> 1)
  int path_count = 15;
  double min_volume_bytes = 0.0;  // coflows below this bypass central scheduling
  double decision_delay_s = 0.0;

  void validate() const;
};

struct GroupSchedule {
  std::vector<PathRate> base_paths;   // equal-progress or pinned rates
  std::vector<PathRate> extra_paths;  // work-conservation top-up
  double total_bps() const;
};

struct ScheduleEntry {
  std::string coflow_id;
  double gamma_s = -1.0;  // -1: not schedulable in entirety this round
  bool pinned = false;
  std::map<GroupKey, GroupSchedule> groups;
};

struct Schedule {
  double timestamp = 0.0;
  std::string trigger;
  std::vector<ScheduleEntry> entries;  // priority order
  std::vector<std::string> failed;
  std::vector<std::string> rejected;  // cumulative over the run
  int lp_count = 0;

  const ScheduleEntry* find(const std::string& coflow_id) const;
  nlohmann::json to_json(const WanGraph& g) const;
};

// Driver-side view of one live coflow: unfinished groups with remaining bytes.
struct ActiveGroup {
  GroupKey key;
  double remaining_bytes = 0.0;
};

struct ActiveCoflow {
  std::string id;
  double arrival_s = 0.0;
  std::optional<double> deadline_s;  // relative to arrival
  std::vector<ActiveGroup> groups;
};

// Event-driven scheduling state machine. Priority order is shortest remaining
// completion time; deadline coflows pass admission control once and keep a
// pinned reservation from then on. Remaining volumes always come from the
// caller, so the scheduler itself holds no fluid state.
class OnlineScheduler {
 public:
  OnlineScheduler(WanGraph g, SchedulerConfig cfg);

  const WanGraph& graph() const { return graph_; }
  const SchedulerConfig& config() const { return cfg_; }

  // Admission decision at arrival time; false means rejected (deadline cannot
  // be met). Admitted deadline coflows get their rates pinned here.
  bool admit(double now, const ActiveCoflow& c);

  // Additive flow update; re-pins admitted deadline coflows.
  void coflow_updated(double now, const ActiveCoflow& c);

  void group_finished(const std::string& coflow_id, GroupKey key);
  void forget(const std::string& coflow_id);

  // Applies the event to the internal graph; true when the change is
  // significant (routes rebuilt, broken pins re-solved, caller reschedules).
  bool apply_wan_event(double now, const WanEvent& e, const std::vector<ActiveCoflow>& active);

  // Coflows whose last allocation shares an arc with the given finished
  // group, plus everything that previously failed (it may fit now).
  std::set<std::string> affected_by_group(const std::string& coflow_id, GroupKey key) const;

  // Full or restricted allocation round at time `now`. With a non-empty
  // restrict set, coflows outside it keep their previous base rates.
  const Schedule& reschedule(double now, const std::string& trigger,
                             const std::vector<ActiveCoflow>& active,
                             const std::set<std::string>& restrict_to = {});

  // Offline entry point: sort by standalone gamma ascending, then allocate.
  const Schedule& run_offline(double now, const std::vector<ActiveCoflow>& active);

  const Schedule& last() const { return last_; }
  bool is_admitted(const std::string& id) const { return admitted_.count(id) > 0; }
  bool deadline_missed_flagged(const std::string& id) const;
  const std::vector<std::string>& rejected() const { return rejected_; }

  // Standalone gamma of the remaining volumes on the empty (1-alpha)-scaled
  // graph; infinity when currently unschedulable.
  double standalone_gamma(const ActiveCoflow& c);

 private:
  struct Pin {
    double admit_gamma_s = 0.0;
    double deadline_abs_s = 0.0;
    double arrival_s = 0.0;
    std::map<GroupKey, GroupAlloc> groups;  // scaled rates
  };

  void ensure_routes(const std::set<GroupKey>& pairs);
  void rebuild_routes();
  std::vector<double> scaled_caps(double factor) const;
  static void subtract(std::vector<double>& caps, const std::map<int, double>& rates);
  bool try_pin(double now, const ActiveCoflow& c, double deadline_abs);
  void revalidate_pins(double now, const std::vector<ActiveCoflow>& active);
  const Schedule& alloc_bandwidth(double now, const std::string& trigger,
                                  std::vector<const ActiveCoflow*> ordered,
                                  const std::set<std::string>& restrict_to);

  WanGraph graph_;
  SchedulerConfig cfg_;
  RouteSet routes_;
  std::set<GroupKey> known_pairs_;
  std::map<std::string, Pin> pins_;
  std::set<std::string> admitted_;
  std::set<std::string> missed_flag_;
  std::vector<std::string> rejected_;
  Schedule last_;
  int pending_lp_count_ = 0;  // admission/sort solves folded into next round
};

}  // namespace terra

#endif
