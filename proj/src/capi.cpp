#include "terra/terra.h"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "core/policies.hpp"
#include "core/scenarios.hpp"
#include "core/sim.hpp"
#include "core/topology.hpp"
#include "core/workload.hpp"

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

template <typename Fn>
terra_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const terra::ConfigError& e) {
    set_error(e.what());
    return TERRA_EINVAL;
  } catch (const std::exception& e) {
    set_error(e.what());
    return TERRA_EINTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

terra::SimConfig to_sim_config(const terra_config* cfg) {
  terra::SimConfig sim_cfg;
  if (cfg) {
    sim_cfg.sched.alpha = cfg->alpha;
    sim_cfg.sched.rho = cfg->rho;
    sim_cfg.sched.eta = cfg->eta;
    sim_cfg.sched.path_count = cfg->path_count;
    sim_cfg.sched.min_volume_bytes = cfg->min_volume_bytes;
    sim_cfg.sched.decision_delay_s = cfg->decision_delay_s;
    sim_cfg.record_trace = cfg->record_trace != 0;
  }
  return sim_cfg;
}

terra_status write_lines(const std::vector<std::string>& lines, const char* path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    set_error(std::string("cannot open for writing: ") + path);
    return TERRA_EIO;
  }
  for (const std::string& l : lines) out << l << '\n';
  return TERRA_OK;
}

}  // namespace

struct terra_topology {
  terra::WanGraph graph;
};

struct terra_workload {
  terra::Workload wl;
};

struct terra_result {
  terra::RunOutput out;
};

extern "C" {

void terra_config_defaults(terra_config* cfg) {
  if (!cfg) return;
  terra::SchedulerConfig d;
  cfg->alpha = d.alpha;
  cfg->rho = d.rho;
  cfg->eta = d.eta;
  cfg->path_count = d.path_count;
  cfg->min_volume_bytes = d.min_volume_bytes;
  cfg->decision_delay_s = d.decision_delay_s;
  cfg->record_trace = 1;
}

const char* terra_version(void) { return "1.0.0"; }

const char* terra_last_error(void) { return g_last_error.c_str(); }

terra_status terra_topology_load_file(const char* path, terra_topology** out) {
  if (!path || !out) {
    set_error("null argument");
    return TERRA_EINVAL;
  }
  return guarded([&]() {
    auto* t = new terra_topology{terra::load_topology_file(path)};
    *out = t;
    return TERRA_OK;
  });
}

terra_status terra_topology_load_json(const char* json_text, terra_topology** out) {
  if (!json_text || !out) {
    set_error("null argument");
    return TERRA_EINVAL;
  }
  return guarded([&]() {
    nlohmann::json doc = nlohmann::json::parse(json_text, nullptr, false);
    if (doc.is_discarded()) {
      set_error("malformed topology JSON");
      return TERRA_EINVAL;
    }
    *out = new terra_topology{terra::load_topology(doc)};
    return TERRA_OK;
  });
}

void terra_topology_free(terra_topology* t) { delete t; }

terra_status terra_workload_load_file(const char* path, terra_workload** out) {
  if (!path || !out) {
    set_error("null argument");
    return TERRA_EINVAL;
  }
  return guarded([&]() {
    *out = new terra_workload{terra::load_workload_file(path)};
    return TERRA_OK;
  });
}

terra_status terra_workload_load_json(const char* json_text, terra_workload** out) {
  if (!json_text || !out) {
    set_error("null argument");
    return TERRA_EINVAL;
  }
  return guarded([&]() {
    nlohmann::json doc = nlohmann::json::parse(json_text, nullptr, false);
    if (doc.is_discarded()) {
      set_error("malformed workload JSON");
      return TERRA_EINVAL;
    }
    *out = new terra_workload{terra::load_workload(doc)};
    return TERRA_OK;
  });
}

terra_status terra_workload_generate(const char* gen_spec_json, const terra_topology* topo,
                                     uint64_t seed, terra_workload** out) {
  if (!gen_spec_json || !topo || !out) {
    set_error("null argument");
    return TERRA_EINVAL;
  }
  return guarded([&]() {
    nlohmann::json spec = nlohmann::json::parse(gen_spec_json, nullptr, false);
    if (spec.is_discarded()) {
      set_error("malformed generator spec JSON");
      return TERRA_EINVAL;
    }
    *out = new terra_workload{terra::generate_workload(spec, topo->graph, seed)};
    return TERRA_OK;
  });
}

terra_status terra_workload_to_json(const terra_workload* wl, char** out_json) {
  if (!wl || !out_json) {
    set_error("null argument");
    return TERRA_EINVAL;
  }
  return guarded([&]() {
    *out_json = dup_string(wl->wl.to_json().dump(2));
    return TERRA_OK;
  });
}

void terra_workload_free(terra_workload* w) { delete w; }

terra_status terra_scenario(const char* name, terra_topology** topo, terra_workload** wl,
                            terra_config* cfg) {
  if (!name || !topo || !wl) {
    set_error("null argument");
    return TERRA_EINVAL;
  }
  return guarded([&]() {
    terra::Scenario s = terra::builtin_scenario(name);
    auto* t = new terra_topology{terra::load_topology(s.topology)};
    auto* w = new terra_workload{terra::load_workload(s.workload)};
    if (cfg) {
      terra_config_defaults(cfg);
      cfg->alpha = s.cfg.alpha;
      cfg->rho = s.cfg.rho;
      cfg->eta = s.cfg.eta;
      cfg->path_count = s.cfg.path_count;
    }
    *topo = t;
    *wl = w;
    return TERRA_OK;
  });
}

terra_status terra_run(const terra_topology* topo, const terra_workload* wl, const char* policy,
                       const terra_config* cfg, uint64_t seed, terra_result** out) {
  if (!topo || !wl || !policy || !out) {
    set_error("null argument");
    return TERRA_EINVAL;
  }
  std::shared_ptr<terra::Policy> pol;
  try {
    pol = terra::make_policy(policy);
  } catch (const std::exception& e) {
    set_error(e.what());
    return TERRA_EPOLICY;
  }
  return guarded([&]() {
    terra::SimCore sim(topo->graph, wl->wl, pol, to_sim_config(cfg), seed);
    *out = new terra_result{sim.run()};
    return TERRA_OK;
  });
}

terra_status terra_result_metric(const terra_result* r, const char* name, double* out_value) {
  if (!r || !name || !out_value) {
    set_error("null argument");
    return TERRA_EINVAL;
  }
  const terra::Metrics& m = r->out.metrics;
  const std::string key = name;
  double v;
  if (key == "avg_cct_s") v = m.avg_cct_s;
  else if (key == "p95_cct_s") v = m.p95_cct_s;
  else if (key == "avg_jct_s") v = m.avg_jct_s;
  else if (key == "p95_jct_s") v = m.p95_jct_s;
  else if (key == "utilization") v = m.utilization;
  else if (key == "makespan_s") v = m.makespan_s;
  else if (key == "coflows") v = m.coflows;
  else if (key == "finished") v = m.finished;
  else if (key == "unfinished") v = m.unfinished;
  else if (key == "jobs") v = m.jobs;
  else if (key == "jobs_complete") v = m.jobs_complete;
  else if (key == "deadline_total") v = m.deadline_total;
  else if (key == "admitted") v = m.admitted;
  else if (key == "rejected") v = m.rejected;
  else if (key == "deadline_met") v = m.deadline_met;
  else if (key == "met_fraction") v = m.met_fraction;
  else if (key == "lp_count") v = m.lp_count;
  else if (key == "rounds") v = m.rounds;
  else if (key == "capacity_violations") v = m.capacity_violations;
  else if (key == "conservation_violations") v = m.conservation_violations;
  else {
    set_error("unknown metric: " + key);
    return TERRA_EINVAL;
  }
  *out_value = v;
  return TERRA_OK;
}

terra_status terra_result_csv_row(const terra_result* r, const char* workload_name,
                                  char** out_row) {
  if (!r || !out_row) {
    set_error("null argument");
    return TERRA_EINVAL;
  }
  terra::Metrics m = r->out.metrics;
  m.workload = workload_name ? workload_name : "";
  *out_row = dup_string(m.csv_row());
  return TERRA_OK;
}

const char* terra_metrics_csv_header(void) {
  static const std::string header = terra::Metrics::csv_header();
  return header.c_str();
}

terra_status terra_result_write_trace(const terra_result* r, const char* path) {
  if (!r || !path) {
    set_error("null argument");
    return TERRA_EINVAL;
  }
  return write_lines(r->out.trace_lines, path);
}

terra_status terra_result_write_schedule_trace(const terra_result* r, const char* path) {
  if (!r || !path) {
    set_error("null argument");
    return TERRA_EINVAL;
  }
  return write_lines(r->out.schedule_lines, path);
}

void terra_result_free(terra_result* r) { delete r; }

void terra_string_free(char* s) { std::free(s); }

}  // extern "C"
