#include "core/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <queue>

#include "core/units.hpp"

namespace terra {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace

double TransferUnit::total_assigned() const {
  double s = 0.0;
  for (const PathRate& p : assigned) s += p.rate_bps;
  return s;
}

double TransferUnit::total_effective() const {
  double s = 0.0;
  for (const PathRate& p : effective) s += p.rate_bps;
  return s;
}

SimCore::SimCore(WanGraph topo, Workload wl, std::shared_ptr<Policy> policy, SimConfig cfg,
                 uint64_t seed)
    : graph_(std::move(topo)), wl_(std::move(wl)), policy_(std::move(policy)), cfg_(cfg),
      seed_(seed) {
  cfg_.sched.validate();
  arc_used_.assign(graph_.arc_count(), 0.0);

  std::set<std::string> ids;
  for (const JobSpec& job : wl_.jobs) {
    job_delay_[job.id] = job.compute_delay_s;
    for (const CoflowSpec& cs : job.coflows) {
      if (!ids.insert(cs.id).second)
        throw ConfigError("coflow id " + cs.id + " is not unique across jobs");
      SimCoflow sc;
      sc.job_id = job.id;
      sc.meta.id = cs.id;
      sc.meta.arrival_s = job.arrival_s;
      sc.meta.deadline_s = cs.deadline_s;
      for (const FlowSpec& fs : cs.flows) {
        Flow f;
        f.id = fs.id;
        f.src = graph_.node(fs.src);
        f.dst = graph_.node(fs.dst);
        f.volume_bytes = fs.bytes;
        sc.meta.flows.push_back(std::move(f));
      }
      sc.meta.groups = group_flows(sc.meta.flows);
      coflows_[cs.id] = std::move(sc);
      coflow_job_[cs.id] = job.id;
      dep_count_[cs.id] = static_cast<int>(cs.deps.size());
      for (const std::string& d : cs.deps) dependents_[d].push_back(cs.id);
      if (cs.deps.empty())
        queue_.push_back({job.arrival_s, seq_++, 0, cs.id, {}});
    }
  }
  for (const WanEventSpec& es : wl_.wan_events) {
    WanEvent e;
    e.time = es.t_s;
    if (es.kind == "fail")
      e.kind = WanEvent::Kind::kLinkFail;
    else if (es.kind == "recover")
      e.kind = WanEvent::Kind::kLinkRecover;
    else
      e.kind = WanEvent::Kind::kBandwidthChange;
    e.src = es.src;
    e.dst = es.dst;
    e.new_capacity_bps = gbps_to_bps(es.gbps);
    e.seq = seq_;
    // fail fast on unknown links
    auto idx = graph_.arc_index(graph_.node(e.src), graph_.node(e.dst));
    if (!idx) throw ConfigError("wan event references unknown link " + e.src + "->" + e.dst);
    queue_.push_back({es.t_s, seq_++, 1, {}, e});
  }
  std::make_heap(queue_.begin(), queue_.end(), std::greater<Queued>());
}

const SimCoflow& SimCore::coflow(const std::string& id) const { return coflows_.at(id); }

std::vector<const SimCoflow*> SimCore::active_coflows() const {
  std::vector<const SimCoflow*> out;
  for (const auto& [id, sc] : coflows_) {
    if (sc.submitted && !sc.rejected && sc.finish_s < 0.0) out.push_back(&sc);
  }
  return out;
}

const std::vector<int>& SimCore::units_of(const std::string& coflow_id) const {
  return coflows_.at(coflow_id).unit_idxs;
}

void SimCore::set_rates(int unit_idx, std::vector<PathRate> paths) {
  std::vector<PathRate> kept;
  for (PathRate& p : paths)
    if (p.rate_bps > 0.0 && p.nodes.size() >= 2) kept.push_back(std::move(p));
  units_.at(unit_idx).assigned = std::move(kept);
  rates_dirty_ = true;
}

void SimCore::clear_rates() {
  for (TransferUnit& u : units_)
    if (!u.done) u.assigned.clear();
  rates_dirty_ = true;
}

void SimCore::push_schedule_record(const nlohmann::json& rec) {
  schedule_lines_.push_back(rec.dump());
  ++record_.rounds;
}

void SimCore::trace(double t, const std::string& kind, const std::string& coflow,
                    const std::string& flow, const std::string& link) {
  if (!cfg_.record_trace) return;
  nlohmann::json rec;
  rec["t"] = t;
  rec["kind"] = kind;
  if (!coflow.empty()) rec["coflow"] = coflow;
  if (!flow.empty()) rec["flow"] = flow;
  if (!link.empty()) rec["link"] = link;
  trace_lines_.push_back(rec.dump());  // digest appended when the batch settles
}

std::string SimCore::rates_digest() const {
  uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
  };
  for (const TransferUnit& u : units_) {
    if (u.done) continue;
    mix(u.unit_id);
    for (const PathRate& p : u.effective) {
      for (NodeId n : p.nodes) mix(graph_.node_name(n));
      mix(fmt17(p.rate_bps));
    }
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void SimCore::submit(const std::string& coflow_id, EventBatch& batch) {
  SimCoflow& sc = coflows_.at(coflow_id);
  sc.submitted = true;
  sc.submit_s = now_;
  sc.meta.arrival_s = now_;
  trace(now_, "arrival", coflow_id, "", "");
  AdmitDecision decision = policy_->admit(*this, sc);
  if (decision == AdmitDecision::kReject) {
    sc.rejected = true;
    sc.meta.state = CoflowState::kRejected;
    trace(now_, "reject", coflow_id, "", "");
    unblock_dependents(coflow_id, sc.job_id);
    return;
  }
  sc.admitted = decision == AdmitDecision::kAdmit;
  sc.kind = policy_->unit_kind(*this, sc.meta);
  sc.meta.state = CoflowState::kActive;
  if (sc.kind == UnitKind::kGroup) {
    for (const auto& [key, grp] : sc.meta.groups) {
      TransferUnit u;
      u.idx = static_cast<int>(units_.size());
      u.unit_id = coflow_id + "/" + graph_.node_name(key.first) + ">" +
                  graph_.node_name(key.second);
      u.coflow_id = coflow_id;
      u.key = key;
      u.volume_bytes = static_cast<double>(grp.volume_bytes);
      u.remaining_bytes = u.volume_bytes;
      sc.unit_idxs.push_back(u.idx);
      units_.push_back(std::move(u));
    }
  } else {
    for (const Flow& f : sc.meta.flows) {
      TransferUnit u;
      u.idx = static_cast<int>(units_.size());
      u.unit_id = coflow_id + "/" + f.id;
      u.coflow_id = coflow_id;
      u.flow_id = f.id;
      u.key = {f.src, f.dst};
      u.volume_bytes = static_cast<double>(f.volume_bytes);
      u.remaining_bytes = u.volume_bytes;
      sc.unit_idxs.push_back(u.idx);
      units_.push_back(std::move(u));
    }
  }
  sc.units_left = static_cast<int>(sc.unit_idxs.size());
  batch.arrivals.push_back(coflow_id);
}

void SimCore::unblock_dependents(const std::string& coflow_id, const std::string& job_id) {
  auto it = dependents_.find(coflow_id);
  if (it == dependents_.end()) return;
  for (const std::string& child : it->second) {
    if (--dep_count_[child] == 0) {
      double delay = job_delay_[job_id];
      queue_.push_back({now_ + delay, seq_++, 0, child, {}});
      std::push_heap(queue_.begin(), queue_.end(), std::greater<Queued>());
    }
  }
}

void SimCore::coflow_finished(const std::string& id, EventBatch& batch) {
  SimCoflow& sc = coflows_.at(id);
  sc.finish_s = now_;
  sc.meta.state = CoflowState::kFinished;
  batch.coflows_finished.push_back(id);
  trace(now_, "coflow_finish", id, "", "");

  double delivered = 0.0, volume = 0.0;
  for (int idx : sc.unit_idxs) {
    delivered += units_[idx].delivered_bytes;
    volume += units_[idx].volume_bytes;
  }
  if (std::abs(delivered - volume) > 1e-6 * std::max(volume, 1.0))
    ++record_.conservation_violations;

  unblock_dependents(id, sc.job_id);
}

void SimCore::finish_unit(int idx, EventBatch& batch) {
  TransferUnit& u = units_[idx];
  u.done = true;
  u.remaining_bytes = 0.0;
  u.assigned.clear();
  u.effective.clear();
  SimCoflow& sc = coflows_.at(u.coflow_id);
  --sc.units_left;
  if (sc.kind == UnitKind::kGroup) {
    trace(now_, "group_finish", u.coflow_id, "", "");
    batch.groups_finished.push_back({u.coflow_id, u.key});
  } else {
    trace(now_, "flow_finish", u.coflow_id, u.flow_id, "");
    bool group_done = true;
    for (int other : sc.unit_idxs)
      if (units_[other].key == u.key && !units_[other].done) {
        group_done = false;
        break;
      }
    if (group_done) batch.groups_finished.push_back({u.coflow_id, u.key});
  }
  if (sc.units_left == 0) coflow_finished(u.coflow_id, batch);
}

void SimCore::advance_to(double t) {
  double dt = t - now_;
  if (dt > 0.0) {
    bool any_active = false;
    for (const TransferUnit& u : units_)
      if (!u.done) {
        any_active = true;
        break;
      }
    if (any_active) {
      double cap_sum = 0.0, used_sum = 0.0;
      for (int ai = 0; ai < graph_.arc_count(); ++ai) {
        double cap = graph_.effective_capacity(ai);
        cap_sum += cap;
        used_sum += arc_used_[ai];
        const Arc& a = graph_.arc(ai);
        std::string name = graph_.node_name(a.src) + "->" + graph_.node_name(a.dst);
        record_.arc_busy[name] += arc_used_[ai] * dt;
        record_.arc_captime[name] += cap * dt;
      }
      if (cap_sum > 0.0) record_.util_ratio_integral += (used_sum / cap_sum) * dt;
      record_.util_time += dt;
    }
    for (TransferUnit& u : units_) {
      if (u.done) continue;
      double delta = u.total_effective() * dt;
      if (delta <= 0.0) continue;
      delta = std::min(delta, u.remaining_bytes);
      u.remaining_bytes -= delta;
      u.delivered_bytes += delta;
    }
  }
  now_ = t;
}

double SimCore::next_completion() const {
  double best = kInf;
  for (const TransferUnit& u : units_) {
    if (u.done) continue;
    double rate = u.total_effective();
    if (rate <= 0.0) continue;
    best = std::min(best, now_ + u.remaining_bytes / rate);
  }
  return best;
}

void SimCore::finalize_rates(bool assignments_changed) {
  std::vector<double> assigned_sum(graph_.arc_count(), 0.0);
  auto arcs_of = [&](const PathRate& p, std::vector<int>& out) {
    out.clear();
    for (size_t i = 0; i + 1 < p.nodes.size(); ++i) {
      auto ai = graph_.arc_index(p.nodes[i], p.nodes[i + 1]);
      if (ai) out.push_back(*ai);
    }
  };
  std::vector<int> arcs;
  for (const TransferUnit& u : units_) {
    if (u.done) continue;
    for (const PathRate& p : u.assigned) {
      arcs_of(p, arcs);
      for (int ai : arcs) assigned_sum[ai] += p.rate_bps;
    }
  }
  if (assignments_changed) {
    for (int ai = 0; ai < graph_.arc_count(); ++ai) {
      double cap = graph_.effective_capacity(ai);
      if (assigned_sum[ai] > cap * (1.0 + kCapEpsRel) + 1e-3) ++record_.capacity_violations;
    }
  }
  std::vector<double> factor(graph_.arc_count(), 1.0);
  for (int ai = 0; ai < graph_.arc_count(); ++ai) {
    double cap = graph_.effective_capacity(ai);
    if (assigned_sum[ai] > cap)
      factor[ai] = assigned_sum[ai] > 0.0 ? std::max(0.0, cap / assigned_sum[ai]) : 0.0;
  }
  std::fill(arc_used_.begin(), arc_used_.end(), 0.0);
  for (TransferUnit& u : units_) {
    if (u.done) {
      u.effective.clear();
      continue;
    }
    u.effective.clear();
    for (const PathRate& p : u.assigned) {
      arcs_of(p, arcs);
      double f = 1.0;
      for (int ai : arcs) f = std::min(f, factor[ai]);
      if (f <= 0.0) continue;
      PathRate e = p;
      e.rate_bps = p.rate_bps * f;
      for (int ai : arcs) arc_used_[ai] += e.rate_bps;
      u.effective.push_back(std::move(e));
    }
  }
}

RunOutput SimCore::run() {
  const bool staged_mode = cfg_.sched.decision_delay_s > 0.0;
  long guard = 0;
  while (true) {
    if (++guard > 5'000'000) throw ConfigError("simulation exceeded event budget");
    double t_evt = queue_.empty() ? kInf : queue_.front().time;
    double t_fin = next_completion();
    double t_next = std::min(t_evt, t_fin);
    if (t_next == kInf) break;
    advance_to(t_next);

    EventBatch batch;
    batch.time = now_;
    size_t trace_mark = trace_lines_.size();
    bool any = false;
    for (;;) {
      bool progressed = false;
      while (!queue_.empty() && queue_.front().time <= now_) {
        std::pop_heap(queue_.begin(), queue_.end(), std::greater<Queued>());
        Queued q = std::move(queue_.back());
        queue_.pop_back();
        if (q.type == 0) {
          submit(q.coflow_id, batch);
        } else if (q.type == 1) {
          graph_ = apply_event(graph_, q.wan);
          batch.wan_events.push_back(q.wan);
          const char* kind = q.wan.kind == WanEvent::Kind::kLinkFail        ? "link_fail"
                             : q.wan.kind == WanEvent::Kind::kLinkRecover   ? "link_recover"
                                                                            : "bandwidth_change";
          trace(now_, kind, "", "", q.wan.src + "->" + q.wan.dst);
        } else {
          // delayed decision takes effect now
          for (auto& [idx, paths] : staged_store_.at(static_cast<size_t>(q.staged_id))) {
            if (idx < static_cast<int>(units_.size()) && !units_[idx].done)
              units_[idx].assigned = paths;
          }
          rates_dirty_ = true;
        }
        progressed = true;
        any = true;
      }
      for (TransferUnit& u : units_) {
        if (!u.done && u.remaining_bytes <= kFinishEpsBytes) {
          finish_unit(u.idx, batch);
          progressed = true;
          any = true;
        }
      }
      if (!progressed) break;
    }
    if (!any) {
      // A completion event computed to land exactly between representable
      // instants; nudge the nearest unit over the line.
      int nearest = -1;
      double best = kInf;
      for (const TransferUnit& u : units_) {
        if (u.done || u.total_effective() <= 0.0) continue;
        if (u.remaining_bytes < best) {
          best = u.remaining_bytes;
          nearest = u.idx;
        }
      }
      if (nearest < 0) break;
      units_[nearest].delivered_bytes += units_[nearest].remaining_bytes;
      units_[nearest].remaining_bytes = 0.0;
      finish_unit(nearest, batch);
    }

    if (staged_mode) {
      // Compute the decision now, let it take effect decision_delay later.
      std::map<int, std::vector<PathRate>> before;
      for (const TransferUnit& u : units_)
        if (!u.done) before[u.idx] = u.assigned;
      bool was_dirty = rates_dirty_;
      rates_dirty_ = false;
      policy_->assign(*this, batch);
      if (rates_dirty_) {
        std::map<int, std::vector<PathRate>> staged;
        for (const TransferUnit& u : units_)
          if (!u.done) staged[u.idx] = u.assigned;
        staged_store_.push_back(std::move(staged));
        Queued q;
        q.time = now_ + cfg_.sched.decision_delay_s;
        q.seq = seq_++;
        q.type = 2;
        q.staged_id = static_cast<int>(staged_store_.size()) - 1;
        queue_.push_back(std::move(q));
        std::push_heap(queue_.begin(), queue_.end(), std::greater<Queued>());
        for (TransferUnit& u : units_) {
          if (u.done) continue;
          auto it = before.find(u.idx);
          u.assigned = it != before.end() ? it->second : std::vector<PathRate>{};
        }
      }
      rates_dirty_ = was_dirty || rates_dirty_;
      finalize_rates(false);
      rates_dirty_ = false;
    } else {
      policy_->assign(*this, batch);
      finalize_rates(rates_dirty_);
      rates_dirty_ = false;
    }

    if (cfg_.record_trace) {
      std::string digest = rates_digest();
      for (size_t i = trace_mark; i < trace_lines_.size(); ++i) {
        nlohmann::json rec = nlohmann::json::parse(trace_lines_[i]);
        rec["digest"] = digest;
        trace_lines_[i] = rec.dump();
      }
    }
  }

  // Outcomes.
  double makespan = 0.0;
  for (const auto& [id, sc] : coflows_) {
    CoflowOutcome co;
    co.id = id;
    co.job_id = sc.job_id;
    co.arrival_s = sc.submitted ? sc.submit_s : -1.0;
    co.finish_s = sc.finish_s;
    co.bytes = static_cast<double>(sc.meta.total_bytes());
    co.deadline_s = sc.meta.deadline_s;
    co.admitted = sc.admitted;
    co.rejected = sc.rejected;
    record_.coflows.push_back(co);
    if (sc.finish_s > makespan) makespan = sc.finish_s;
  }
  record_.makespan_s = makespan;
  for (const JobSpec& job : wl_.jobs) {
    JobOutcome jo;
    jo.id = job.id;
    jo.arrival_s = job.arrival_s;
    jo.complete = true;
    for (const CoflowSpec& cs : job.coflows) {
      const SimCoflow& sc = coflows_.at(cs.id);
      if (sc.finish_s < 0.0) jo.complete = false;
      jo.finish_s = std::max(jo.finish_s, sc.finish_s);
    }
    record_.jobs.push_back(jo);
  }

  RunOutput out;
  out.metrics = compute_metrics(record_);
  out.metrics.policy = policy_->name();
  out.metrics.seed = seed_;
  out.record = std::move(record_);
  out.trace_lines = std::move(trace_lines_);
  out.schedule_lines = std::move(schedule_lines_);
  return out;
}

std::vector<double> disaggregate_group(const std::vector<RateSegment>& timeline,
                                       const std::vector<double>& flow_volumes,
                                       const std::string& mode) {
  const size_t n = flow_volumes.size();
  std::vector<double> remaining = flow_volumes;
  std::vector<double> finish(n, -1.0);
  size_t done = 0;
  double t_end = 0.0;
  for (const RateSegment& seg : timeline) {
    double t = seg.t0;
    t_end = seg.t1;
    while (t < seg.t1 - 1e-15 && done < n) {
      if (seg.rate_bps <= 0.0) break;
      if (mode == "fifo") {
        size_t head = 0;
        while (head < n && finish[head] >= 0.0) ++head;
        if (head == n) break;
        double need = remaining[head] / seg.rate_bps;
        double take = std::min(need, seg.t1 - t);
        remaining[head] -= take * seg.rate_bps;
        t += take;
        if (remaining[head] <= 1e-6) {
          finish[head] = t;
          ++done;
        }
      } else {  // fair
        size_t active = n - done;
        double each = seg.rate_bps / static_cast<double>(active);
        double soonest = kInf;
        for (size_t i = 0; i < n; ++i)
          if (finish[i] < 0.0) soonest = std::min(soonest, remaining[i] / each);
        double take = std::min(soonest, seg.t1 - t);
        for (size_t i = 0; i < n; ++i)
          if (finish[i] < 0.0) remaining[i] -= take * each;
        t += take;
        for (size_t i = 0; i < n; ++i)
          if (finish[i] < 0.0 && remaining[i] <= 1e-6) {
            finish[i] = t;
            ++done;
          }
      }
    }
    if (done == n) break;
  }
  for (size_t i = 0; i < n; ++i)
    if (finish[i] < 0.0) finish[i] = t_end;
  return finish;
}

}  // namespace terra
