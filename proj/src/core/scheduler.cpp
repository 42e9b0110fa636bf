#include "core/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "core/units.hpp"

namespace terra {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void SchedulerConfig::validate() const {
  if (alpha < 0.0 || alpha >= 1.0) throw ConfigError("alpha must lie in [0,1)");
  if (rho <= 0.0 || rho >= 1.0) throw ConfigError("rho must lie in (0,1)");
  if (eta <= 1.0) throw ConfigError("eta must be greater than 1");
  if (path_count < 1) throw ConfigError("path count must be at least 1");
  if (min_volume_bytes < 0.0) throw ConfigError("bypass threshold must be non-negative");
  if (decision_delay_s < 0.0) throw ConfigError("decision delay must be non-negative");
}

double GroupSchedule::total_bps() const {
  double sum = 0.0;
  for (const PathRate& p : base_paths) sum += p.rate_bps;
  for (const PathRate& p : extra_paths) sum += p.rate_bps;
  return sum;
}

const ScheduleEntry* Schedule::find(const std::string& coflow_id) const {
  for (const ScheduleEntry& e : entries)
    if (e.coflow_id == coflow_id) return &e;
  return nullptr;
}

nlohmann::json Schedule::to_json(const WanGraph& g) const {
  nlohmann::json rec;
  rec["time"] = timestamp;
  rec["trigger"] = trigger;
  nlohmann::json coflows = nlohmann::json::object();
  for (const ScheduleEntry& e : entries) {
    nlohmann::json je;
    je["gamma_s"] = e.gamma_s;
    nlohmann::json paths = nlohmann::json::array();
    for (const auto& [key, gs] : e.groups) {
      auto emit = [&](const PathRate& p) {
        nlohmann::json jp;
        nlohmann::json hops = nlohmann::json::array();
        for (NodeId n : p.nodes) hops.push_back(g.node_name(n));
        jp["hops"] = hops;
        jp["bytes_per_s"] = p.rate_bps;
        paths.push_back(jp);
      };
      for (const PathRate& p : gs.base_paths) emit(p);
      for (const PathRate& p : gs.extra_paths) emit(p);
    }
    je["paths"] = paths;
    coflows[e.coflow_id] = je;
  }
  rec["coflows"] = coflows;
  rec["failed"] = failed;
  rec["rejected"] = rejected;
  rec["lp_count"] = lp_count;
  return rec;
}

OnlineScheduler::OnlineScheduler(WanGraph g, SchedulerConfig cfg)
    : graph_(std::move(g)), cfg_(cfg) {
  cfg_.validate();
}

void OnlineScheduler::ensure_routes(const std::set<GroupKey>& pairs) {
  std::set<GroupKey> missing;
  for (const GroupKey& p : pairs) {
    known_pairs_.insert(p);
    if (!routes_.has(p)) missing.insert(p);
  }
  if (!missing.empty())
    routes_.merge(RouteSet::k_shortest(graph_, missing, cfg_.path_count));
}

void OnlineScheduler::rebuild_routes() {
  routes_.clear();
  routes_ = RouteSet::k_shortest(graph_, known_pairs_, cfg_.path_count);
}

std::vector<double> OnlineScheduler::scaled_caps(double factor) const {
  std::vector<double> caps = graph_.effective_capacities();
  for (double& c : caps) c *= factor;
  return caps;
}

void OnlineScheduler::subtract(std::vector<double>& caps, const std::map<int, double>& rates) {
  for (const auto& [ai, r] : rates) caps[ai] = std::max(0.0, caps[ai] - r);
}

double OnlineScheduler::standalone_gamma(const ActiveCoflow& c) {
  std::set<GroupKey> pairs;
  std::vector<GroupDemand> demands;
  for (const ActiveGroup& ag : c.groups) {
    if (ag.remaining_bytes <= 0.0) continue;
    pairs.insert(ag.key);
    demands.push_back({ag.key, ag.remaining_bytes});
  }
  if (demands.empty()) return 0.0;
  ensure_routes(pairs);
  ++pending_lp_count_;
  auto sol = min_cct(demands, graph_, scaled_caps(1.0 - cfg_.alpha), routes_);
  return sol ? sol->gamma_s : kInf;
}

bool OnlineScheduler::admit(double now, const ActiveCoflow& c) {
  if (!c.deadline_s) return true;
  std::set<GroupKey> pairs;
  std::vector<GroupDemand> demands;
  for (const ActiveGroup& ag : c.groups) {
    pairs.insert(ag.key);
    demands.push_back({ag.key, ag.remaining_bytes});
  }
  ensure_routes(pairs);
  std::vector<double> caps = scaled_caps(1.0 - cfg_.alpha);
  for (const auto& [id, pin] : pins_)
    for (const auto& [key, ga] : pin.groups) subtract(caps, ga.arc_rates);
  ++pending_lp_count_;
  auto sol = min_cct(demands, graph_, caps, routes_);
  const double deadline = *c.deadline_s;
  if (!sol || sol->gamma_s > cfg_.eta * deadline + 1e-12) {
    rejected_.push_back(c.id);
    return false;
  }
  Pin pin;
  pin.admit_gamma_s = sol->gamma_s;
  pin.deadline_abs_s = now + deadline;
  pin.arrival_s = now;
  const double scale = std::min(1.0, sol->gamma_s / deadline);
  for (GroupAlloc& ga : sol->groups) {
    ga.rate_bps *= scale;
    for (auto& [ai, r] : ga.arc_rates) r *= scale;
    for (PathRate& p : ga.paths) p.rate_bps *= scale;
    pin.groups[ga.key] = ga;
  }
  pins_[c.id] = std::move(pin);
  admitted_.insert(c.id);
  return true;
}

bool OnlineScheduler::try_pin(double now, const ActiveCoflow& c, double deadline_abs) {
  pins_.erase(c.id);
  std::set<GroupKey> pairs;
  std::vector<GroupDemand> demands;
  for (const ActiveGroup& ag : c.groups) {
    if (ag.remaining_bytes <= 0.0) continue;
    pairs.insert(ag.key);
    demands.push_back({ag.key, ag.remaining_bytes});
  }
  ensure_routes(pairs);
  std::vector<double> caps = scaled_caps(1.0 - cfg_.alpha);
  for (const auto& [id, pin] : pins_)
    for (const auto& [key, ga] : pin.groups) subtract(caps, ga.arc_rates);
  ++pending_lp_count_;
  auto sol = demands.empty() ? std::optional<Allocation>(Allocation{})
                             : min_cct(demands, graph_, caps, routes_);
  const double remaining_deadline = deadline_abs - now;
  if (!sol || remaining_deadline <= 0.0 || sol->gamma_s > remaining_deadline + 1e-12) {
    missed_flag_.insert(c.id);
    return false;
  }
  Pin pin;
  pin.admit_gamma_s = sol->gamma_s;
  pin.deadline_abs_s = deadline_abs;
  pin.arrival_s = c.arrival_s;
  const double scale = std::min(1.0, sol->gamma_s / remaining_deadline);
  for (GroupAlloc& ga : sol->groups) {
    ga.rate_bps *= scale;
    for (auto& [ai, r] : ga.arc_rates) r *= scale;
    for (PathRate& p : ga.paths) p.rate_bps *= scale;
    pin.groups[ga.key] = ga;
  }
  pins_[c.id] = std::move(pin);
  missed_flag_.erase(c.id);
  return true;
}

void OnlineScheduler::coflow_updated(double now, const ActiveCoflow& c) {
  auto it = pins_.find(c.id);
  if (it == pins_.end()) return;
  try_pin(now, c, it->second.deadline_abs_s);
}

void OnlineScheduler::group_finished(const std::string& coflow_id, GroupKey key) {
  auto it = pins_.find(coflow_id);
  if (it != pins_.end()) it->second.groups.erase(key);
}

void OnlineScheduler::forget(const std::string& coflow_id) {
  pins_.erase(coflow_id);
  admitted_.erase(coflow_id);
  missed_flag_.erase(coflow_id);
}

bool OnlineScheduler::deadline_missed_flagged(const std::string& id) const {
  return missed_flag_.count(id) > 0;
}

bool OnlineScheduler::apply_wan_event(double now, const WanEvent& e,
                                      const std::vector<ActiveCoflow>& active) {
  NodeId u = graph_.node(e.src);
  NodeId v = graph_.node(e.dst);
  auto idx = graph_.arc_index(u, v);
  if (!idx) throw ConfigError("event references unknown link " + e.src + "->" + e.dst);
  const double old_eff = graph_.effective_capacity(*idx);
  graph_ = apply_event(graph_, e);
  const double new_eff = graph_.effective_capacity(*idx);

  bool significant;
  if (old_eff <= 0.0)
    significant = new_eff > 0.0;  // recovery from a dead link always matters
  else
    significant = significant_change(old_eff, new_eff, cfg_.rho);

  if (significant) {
    if (e.kind != WanEvent::Kind::kBandwidthChange) rebuild_routes();
    revalidate_pins(now, active);
  }
  return significant;
}

void OnlineScheduler::revalidate_pins(double now, const std::vector<ActiveCoflow>& active) {
  if (pins_.empty()) return;
  std::vector<double> usage(graph_.arc_count(), 0.0);
  for (const auto& [id, pin] : pins_)
    for (const auto& [key, ga] : pin.groups)
      for (const auto& [ai, r] : ga.arc_rates) usage[ai] += r;
  std::vector<double> caps = scaled_caps(1.0 - cfg_.alpha);
  double tol = 0.0;
  for (const Arc& a : graph_.arcs()) tol = std::max(tol, a.configured_bps);
  tol *= kCapEpsRel;

  std::vector<std::pair<std::pair<double, std::string>, double>> broken;  // ((arrival,id), deadline)
  for (const auto& [id, pin] : pins_) {
    bool ok = true;
    for (const auto& [key, ga] : pin.groups) {
      for (const auto& [ai, r] : ga.arc_rates) {
        if (r > tol && usage[ai] > caps[ai] + tol) {
          ok = false;
          break;
        }
      }
      if (!ok) break;
    }
    if (!ok) broken.push_back({{pin.arrival_s, id}, pin.deadline_abs_s});
  }
  std::sort(broken.begin(), broken.end());
  for (const auto& [who, deadline_abs] : broken) {
    const std::string& id = who.second;
    auto it = std::find_if(active.begin(), active.end(),
                           [&](const ActiveCoflow& c) { return c.id == id; });
    if (it == active.end()) {
      pins_.erase(id);
      continue;
    }
    try_pin(now, *it, deadline_abs);
  }
}

std::set<std::string> OnlineScheduler::affected_by_group(const std::string& coflow_id,
                                                         GroupKey key) const {
  std::set<std::string> affected{coflow_id};
  for (const std::string& id : last_.failed) affected.insert(id);

  const ScheduleEntry* entry = last_.find(coflow_id);
  if (!entry) return affected;
  auto git = entry->groups.find(key);
  if (git == entry->groups.end()) return affected;

  std::set<int> freed;
  auto collect = [&](const std::vector<PathRate>& paths, std::set<int>& into) {
    for (const PathRate& p : paths)
      for (size_t i = 0; i + 1 < p.nodes.size(); ++i) {
        auto ai = graph_.arc_index(p.nodes[i], p.nodes[i + 1]);
        if (ai) into.insert(*ai);
      }
  };
  collect(git->second.base_paths, freed);
  collect(git->second.extra_paths, freed);

  for (const ScheduleEntry& e : last_.entries) {
    if (affected.count(e.coflow_id)) continue;
    std::set<int> used;
    for (const auto& [k, gs] : e.groups) {
      collect(gs.base_paths, used);
      collect(gs.extra_paths, used);
    }
    for (int ai : used)
      if (freed.count(ai)) {
        affected.insert(e.coflow_id);
        break;
      }
  }
  return affected;
}

const Schedule& OnlineScheduler::reschedule(double now, const std::string& trigger,
                                            const std::vector<ActiveCoflow>& active,
                                            const std::set<std::string>& restrict_to) {
  std::set<GroupKey> pairs;
  for (const ActiveCoflow& c : active)
    for (const ActiveGroup& g : c.groups) pairs.insert(g.key);
  ensure_routes(pairs);

  // Deadline-guaranteed coflows first (largest absolute deadline ahead),
  // everything else by shortest remaining completion time. A deadline coflow
  // whose pin was dropped competes like a plain coflow.
  struct Key {
    int cls;
    double primary;
    double arrival;
    std::string id;
    bool operator<(const Key& o) const {
      return std::tie(cls, primary, arrival, id) < std::tie(o.cls, o.primary, o.arrival, o.id);
    }
  };
  std::vector<std::pair<Key, const ActiveCoflow*>> keyed;
  for (const ActiveCoflow& c : active) {
    auto pin = pins_.find(c.id);
    if (pin != pins_.end()) {
      keyed.push_back({{0, -pin->second.deadline_abs_s, c.arrival_s, c.id}, &c});
    } else if (!restrict_to.empty() && !restrict_to.count(c.id)) {
      keyed.push_back({{2, 0.0, c.arrival_s, c.id}, &c});
    } else {
      keyed.push_back({{1, standalone_gamma(c), c.arrival_s, c.id}, &c});
    }
  }
  std::sort(keyed.begin(), keyed.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<const ActiveCoflow*> ordered;
  for (auto& [k, c] : keyed) ordered.push_back(c);
  return alloc_bandwidth(now, trigger, std::move(ordered), restrict_to);
}

const Schedule& OnlineScheduler::run_offline(double now, const std::vector<ActiveCoflow>& active) {
  std::set<GroupKey> pairs;
  for (const ActiveCoflow& c : active)
    for (const ActiveGroup& g : c.groups) pairs.insert(g.key);
  ensure_routes(pairs);

  std::vector<std::tuple<double, double, std::string, const ActiveCoflow*>> keyed;
  for (const ActiveCoflow& c : active)
    keyed.push_back({standalone_gamma(c), c.arrival_s, c.id, &c});
  std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
    return std::tie(std::get<0>(a), std::get<1>(a), std::get<2>(a)) <
           std::tie(std::get<0>(b), std::get<1>(b), std::get<2>(b));
  });
  std::vector<const ActiveCoflow*> ordered;
  for (auto& k : keyed) ordered.push_back(std::get<3>(k));
  return alloc_bandwidth(now, "offline", std::move(ordered), {});
}

const Schedule& OnlineScheduler::alloc_bandwidth(double now, const std::string& trigger,
                                                 std::vector<const ActiveCoflow*> ordered,
                                                 const std::set<std::string>& restrict_to) {
  Schedule prev = std::move(last_);
  last_ = Schedule{};
  last_.timestamp = now;
  last_.trigger = trigger;
  last_.lp_count = pending_lp_count_;
  pending_lp_count_ = 0;

  std::vector<double> caps_sched = scaled_caps(1.0 - cfg_.alpha);
  std::vector<double> caps_left = graph_.effective_capacities();

  std::map<std::string, ScheduleEntry> entries;
  std::vector<std::string> failed;
  std::vector<const ActiveCoflow*> to_solve;

  auto arc_rates_of_paths = [&](const std::vector<PathRate>& paths) {
    std::map<int, double> rates;
    for (const PathRate& p : paths)
      for (size_t i = 0; i + 1 < p.nodes.size(); ++i) {
        auto ai = graph_.arc_index(p.nodes[i], p.nodes[i + 1]);
        if (ai) rates[*ai] += p.rate_bps;
      }
    return rates;
  };

  // Fixed allocations first: pinned reservations and, on restricted rounds,
  // coflows outside the refresh set.
  for (const ActiveCoflow* c : ordered) {
    ScheduleEntry entry;
    entry.coflow_id = c->id;
    auto pin = pins_.find(c->id);
    if (pin != pins_.end()) {
      entry.pinned = true;
      entry.gamma_s = std::max(0.0, pin->second.deadline_abs_s - now);
      for (const ActiveGroup& ag : c->groups) {
        auto git = pin->second.groups.find(ag.key);
        if (git == pin->second.groups.end()) continue;
        GroupSchedule gs;
        gs.base_paths = git->second.paths;
        entry.groups[ag.key] = std::move(gs);
        subtract(caps_sched, git->second.arc_rates);
        subtract(caps_left, git->second.arc_rates);
      }
      entries[c->id] = std::move(entry);
    } else if (!restrict_to.empty() && !restrict_to.count(c->id)) {
      const ScheduleEntry* old = prev.find(c->id);
      if (old && old->gamma_s >= 0.0) {
        entry.gamma_s = old->gamma_s;
        for (const ActiveGroup& ag : c->groups) {
          auto git = old->groups.find(ag.key);
          if (git == old->groups.end()) continue;
          GroupSchedule gs;
          gs.base_paths = git->second.base_paths;
          auto rates = arc_rates_of_paths(gs.base_paths);
          subtract(caps_sched, rates);
          subtract(caps_left, rates);
          entry.groups[ag.key] = std::move(gs);
        }
        entries[c->id] = std::move(entry);
      } else {
        // previously failed or unknown: refresh it after all
        to_solve.push_back(c);
      }
    } else {
      to_solve.push_back(c);
    }
  }

  // Priority loop over the coflows that need a fresh solution.
  for (const ActiveCoflow* c : to_solve) {
    ScheduleEntry entry;
    entry.coflow_id = c->id;
    std::vector<GroupDemand> demands;
    for (const ActiveGroup& ag : c->groups)
      if (ag.remaining_bytes > 0.0) demands.push_back({ag.key, ag.remaining_bytes});
    std::optional<Allocation> sol;
    if (!demands.empty()) {
      sol = min_cct(demands, graph_, caps_sched, routes_);
      ++last_.lp_count;
    } else {
      sol = Allocation{};
    }
    if (!sol) {
      entry.gamma_s = -1.0;
      failed.push_back(c->id);
    } else {
      entry.gamma_s = sol->gamma_s;
      for (const GroupAlloc& ga : sol->groups) {
        GroupSchedule gs;
        gs.base_paths = ga.paths;
        subtract(caps_sched, ga.arc_rates);
        subtract(caps_left, ga.arc_rates);
        entry.groups[ga.key] = std::move(gs);
      }
    }
    entries[c->id] = std::move(entry);
  }

  // Work conservation: leftovers (including the alpha reserve) go first to
  // the coflows that could not be scheduled in entirety, then to everyone
  // else still moving bytes. Deadline reservations are deliberately not
  // topped up; their spare headroom is what others share.
  auto run_mcf = [&](const std::vector<const ActiveCoflow*>& members) {
    std::vector<GroupDemand> demands;
    std::vector<std::pair<std::string, GroupKey>> owner;
    for (const ActiveCoflow* c : members)
      for (const ActiveGroup& ag : c->groups)
        if (ag.remaining_bytes > 0.0) {
          demands.push_back({ag.key, ag.remaining_bytes});
          owner.push_back({c->id, ag.key});
        }
    if (demands.empty()) return;
    McfResult mcf = max_min_mcf(demands, graph_, caps_left, routes_);
    last_.lp_count += mcf.lp_count;
    for (size_t i = 0; i < mcf.groups.size(); ++i) {
      const GroupAlloc& ga = mcf.groups[i];
      if (ga.rate_bps <= 0.0) continue;
      GroupSchedule& gs = entries[owner[i].first].groups[owner[i].second];
      for (const PathRate& p : ga.paths) gs.extra_paths.push_back(p);
      subtract(caps_left, ga.arc_rates);
    }
  };

  std::vector<const ActiveCoflow*> failed_members, other_members;
  std::set<std::string> failed_set(failed.begin(), failed.end());
  for (const ActiveCoflow* c : ordered) {
    if (failed_set.count(c->id))
      failed_members.push_back(c);
    else if (!pins_.count(c->id))
      other_members.push_back(c);
  }
  run_mcf(failed_members);
  run_mcf(other_members);

  for (const ActiveCoflow* c : ordered) last_.entries.push_back(std::move(entries[c->id]));
  last_.failed = std::move(failed);
  last_.rejected = rejected_;
  return last_;
}

}  // namespace terra
