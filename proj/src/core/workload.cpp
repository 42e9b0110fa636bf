#include "core/workload.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "core/optimizer.hpp"
#include "core/rng.hpp"
#include "core/units.hpp"

namespace terra {

nlohmann::json Workload::to_json() const {
  nlohmann::json doc;
  doc["jobs"] = nlohmann::json::array();
  for (const JobSpec& j : jobs) {
    nlohmann::json jj;
    jj["id"] = j.id;
    jj["arrival_s"] = j.arrival_s;
    if (j.compute_delay_s > 0.0) jj["compute_delay_s"] = j.compute_delay_s;
    jj["coflows"] = nlohmann::json::array();
    for (const CoflowSpec& c : j.coflows) {
      nlohmann::json jc;
      jc["id"] = c.id;
      jc["deps"] = c.deps;
      if (c.deadline_s) jc["deadline_s"] = *c.deadline_s;
      jc["flows"] = nlohmann::json::array();
      for (const FlowSpec& f : c.flows) {
        jc["flows"].push_back({{"id", f.id}, {"src", f.src}, {"dst", f.dst}, {"bytes", f.bytes}});
      }
      jj["coflows"].push_back(jc);
    }
    doc["jobs"].push_back(jj);
  }
  if (!wan_events.empty()) {
    doc["wan_events"] = nlohmann::json::array();
    for (const WanEventSpec& e : wan_events) {
      nlohmann::json je{{"t_s", e.t_s}, {"kind", e.kind}, {"src", e.src}, {"dst", e.dst}};
      if (e.kind == "bandwidth") je["gbps"] = e.gbps;
      doc["wan_events"].push_back(je);
    }
  }
  if (!meta.is_null()) doc["meta"] = meta;
  return doc;
}

Workload load_workload(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("jobs"))
    throw ConfigError("workload document must contain 'jobs'");
  Workload wl;
  std::set<std::string> job_ids;
  for (const auto& jj : doc.at("jobs")) {
    JobSpec job;
    job.id = jj.at("id").get<std::string>();
    if (!job_ids.insert(job.id).second) throw ConfigError("duplicate job id " + job.id);
    job.arrival_s = jj.value("arrival_s", 0.0);
    if (job.arrival_s < 0.0) throw ConfigError("job " + job.id + " has negative arrival");
    job.compute_delay_s = jj.value("compute_delay_s", 0.0);
    std::set<std::string> coflow_ids;
    for (const auto& jc : jj.at("coflows")) {
      CoflowSpec c;
      c.id = jc.at("id").get<std::string>();
      if (!coflow_ids.insert(c.id).second)
        throw ConfigError("duplicate coflow id " + c.id + " in job " + job.id);
      if (jc.contains("deps"))
        for (const auto& d : jc.at("deps")) c.deps.push_back(d.get<std::string>());
      if (jc.contains("deadline_s")) {
        double d = jc.at("deadline_s").get<double>();
        if (d <= 0.0) throw ConfigError("non-positive deadline on coflow " + c.id);
        c.deadline_s = d;
      }
      for (const auto& jf : jc.at("flows")) {
        FlowSpec f;
        f.id = jf.at("id").get<std::string>();
        f.src = jf.at("src").get<std::string>();
        f.dst = jf.at("dst").get<std::string>();
        f.bytes = jf.at("bytes").get<int64_t>();
        if (f.bytes <= 0) throw ConfigError("flow " + f.id + " has non-positive volume");
        if (f.src == f.dst) throw ConfigError("flow " + f.id + " is intra-datacenter");
        c.flows.push_back(std::move(f));
      }
      if (c.flows.empty()) throw ConfigError("coflow " + c.id + " has no flows");
      job.coflows.push_back(std::move(c));
    }
    // Dependency sanity: known ids, acyclic (Kahn).
    std::map<std::string, int> indeg;
    std::map<std::string, std::vector<std::string>> children;
    for (const CoflowSpec& c : job.coflows) indeg[c.id] = 0;
    for (const CoflowSpec& c : job.coflows)
      for (const std::string& d : c.deps) {
        if (!indeg.count(d))
          throw ConfigError("coflow " + c.id + " depends on unknown coflow " + d);
        ++indeg[c.id];
        children[d].push_back(c.id);
      }
    std::vector<std::string> frontier;
    for (auto& [id, deg] : indeg)
      if (deg == 0) frontier.push_back(id);
    size_t seen = 0;
    while (!frontier.empty()) {
      std::string cur = frontier.back();
      frontier.pop_back();
      ++seen;
      for (const std::string& ch : children[cur])
        if (--indeg[ch] == 0) frontier.push_back(ch);
    }
    if (seen != job.coflows.size())
      throw ConfigError("cyclic coflow dependencies in job " + job.id);
    wl.jobs.push_back(std::move(job));
  }
  if (doc.contains("wan_events")) {
    for (const auto& je : doc.at("wan_events")) {
      WanEventSpec e;
      e.t_s = je.at("t_s").get<double>();
      e.kind = je.at("kind").get<std::string>();
      if (e.kind != "fail" && e.kind != "recover" && e.kind != "bandwidth")
        throw ConfigError("unknown wan event kind: " + e.kind);
      e.src = je.at("src").get<std::string>();
      e.dst = je.at("dst").get<std::string>();
      e.gbps = je.value("gbps", 0.0);
      wl.wan_events.push_back(std::move(e));
    }
  }
  if (doc.contains("meta")) wl.meta = doc.at("meta");
  return wl;
}

Workload load_workload_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open workload file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed workload JSON in " + path + ": " + e.what());
  }
  return load_workload(doc);
}

namespace {

struct VolumeSampler {
  std::string kind = "uniform";
  double a = 1.0, b = 10.0;  // parameters, interpretation per kind

  int64_t sample(Rng& rng) const {
    double gb;
    if (kind == "uniform") {
      gb = rng.uniform(a, b);
    } else if (kind == "pareto") {
      gb = rng.pareto(a, b);
      gb = std::min(gb, 1e4);  // clip absurd tail draws at 10 TB
    } else {  // lognormal: a = median in GB, b = sigma
      gb = a * std::exp(rng.normal(0.0, b));
    }
    int64_t bytes = static_cast<int64_t>(std::llround(gb * 1e9));
    return std::max<int64_t>(bytes, 1);
  }
};

int pick_count(Rng& rng, const nlohmann::json& v, int fallback) {
  if (v.is_null()) return fallback;
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_array() && v.size() == 2) {
    int lo = v[0].get<int>(), hi = v[1].get<int>();
    if (lo > hi || lo < 1) throw ConfigError("bad count range in generator spec");
    return lo + static_cast<int>(rng.uniform_index(static_cast<uint64_t>(hi - lo + 1)));
  }
  throw ConfigError("counts must be integers or [lo,hi] ranges");
}

}  // namespace

Workload generate_workload(const nlohmann::json& spec, const WanGraph& topo, uint64_t seed) {
  if (!spec.is_object() || !spec.contains("jobs"))
    throw ConfigError("generator spec must contain 'jobs'");
  const int n_jobs = spec.at("jobs").get<int>();
  if (n_jobs <= 0) throw ConfigError("generator needs a positive job count");
  const int n_dc = topo.node_count();
  if (n_dc < 2) throw ConfigError("generator needs at least two datacenters");

  int spread = (n_dc + 1) / 2 + 1;  // sources span at most ceil(N/2)+1 datacenters
  if (spec.contains("spread")) spread = spec.at("spread").get<int>();
  if (spread < 1 || spread > n_dc) throw ConfigError("spread must lie in [1, node count]");

  VolumeSampler vol;
  if (spec.contains("volume")) {
    const auto& v = spec.at("volume");
    vol.kind = v.value("kind", "uniform");
    if (vol.kind == "uniform") {
      vol.a = v.value("min_gb", 1.0);
      vol.b = v.value("max_gb", 10.0);
    } else if (vol.kind == "pareto") {
      vol.a = v.value("alpha", 1.1);
      vol.b = v.value("min_gb", 0.05);
    } else if (vol.kind == "lognormal") {
      vol.a = v.value("mu_gb", 2.0);
      vol.b = v.value("sigma", 1.0);
    } else {
      throw ConfigError("unknown volume distribution: " + vol.kind);
    }
  }

  std::optional<double> deadline_mult;
  if (spec.contains("deadline_multiplier"))
    deadline_mult = spec.at("deadline_multiplier").get<double>();

  int chain_min = 1, chain_max = 1;
  if (spec.contains("chain")) {
    chain_min = spec.at("chain").value("min", 1);
    chain_max = spec.at("chain").value("max", 1);
    if (chain_min < 1 || chain_max < chain_min) throw ConfigError("bad chain range");
  }
  const double compute_delay = spec.value("compute_delay_s", 0.0);

  Rng rng(seed);

  // Arrival times.
  std::vector<double> arrivals(n_jobs, 0.0);
  const auto& arr = spec.contains("arrival") ? spec.at("arrival")
                                             : nlohmann::json{{"kind", "all_at"}, {"t", 0.0}};
  std::string arr_kind = arr.value("kind", "all_at");
  if (arr_kind == "poisson") {
    double rate = arr.at("rate_per_s").get<double>();
    if (rate <= 0.0) throw ConfigError("poisson rate must be positive");
    double t = 0.0;
    for (int i = 0; i < n_jobs; ++i) {
      t += rng.exponential(rate);
      arrivals[i] = t;
    }
  } else if (arr_kind == "times") {
    auto times = arr.at("times").get<std::vector<double>>();
    if (static_cast<int>(times.size()) != n_jobs)
      throw ConfigError("explicit arrival list must match job count");
    arrivals = times;
  } else if (arr_kind == "all_at") {
    std::fill(arrivals.begin(), arrivals.end(), arr.value("t", 0.0));
  } else {
    throw ConfigError("unknown arrival kind: " + arr_kind);
  }

  // Route set reused for standalone gamma when deadlines are requested.
  RouteSet routes;
  std::set<GroupKey> known;
  const std::vector<double> caps = topo.effective_capacities();

  Workload wl;
  for (int ji = 0; ji < n_jobs; ++ji) {
    JobSpec job;
    job.id = "j" + std::to_string(ji);
    job.arrival_s = arrivals[ji];
    job.compute_delay_s = compute_delay;
    int chain_len =
        chain_min + static_cast<int>(rng.uniform_index(static_cast<uint64_t>(chain_max - chain_min + 1)));
    for (int ci = 0; ci < chain_len; ++ci) {
      CoflowSpec c;
      c.id = job.id + ".c" + std::to_string(ci);
      if (ci > 0) c.deps.push_back(job.id + ".c" + std::to_string(ci - 1));

      int mappers = pick_count(rng, spec.contains("mappers") ? spec.at("mappers") : nlohmann::json(), 2);
      int reducers =
          pick_count(rng, spec.contains("reducers") ? spec.at("reducers") : nlohmann::json(), 1);
      for (int attempt = 0; attempt < 100 && c.flows.empty(); ++attempt) {
        // Source datacenters: up to `spread` distinct sites.
        int n_src = 1 + static_cast<int>(rng.uniform_index(static_cast<uint64_t>(spread)));
        std::vector<int> dcs(n_dc);
        for (int i = 0; i < n_dc; ++i) dcs[i] = i;
        for (int i = n_dc - 1; i > 0; --i)
          std::swap(dcs[i], dcs[rng.uniform_index(static_cast<uint64_t>(i + 1))]);
        std::vector<int> src_dcs(dcs.begin(), dcs.begin() + std::min(n_src, n_dc));
        std::vector<int> dst_dcs;
        for (int r = 0; r < reducers; ++r)
          dst_dcs.push_back(static_cast<int>(rng.uniform_index(static_cast<uint64_t>(n_dc))));

        int fid = 0;
        for (int mi = 0; mi < mappers; ++mi) {
          int src = src_dcs[mi % src_dcs.size()];
          for (int rj = 0; rj < reducers; ++rj) {
            int dst = dst_dcs[rj];
            if (src == dst) continue;  // intra-datacenter traffic is out of scope
            FlowSpec f;
            f.id = c.id + ".f" + std::to_string(fid++);
            f.src = topo.node_name(src);
            f.dst = topo.node_name(dst);
            f.bytes = vol.sample(rng);
            c.flows.push_back(std::move(f));
          }
        }
      }
      if (c.flows.empty()) throw ConfigError("generator failed to place a WAN coflow");

      if (deadline_mult) {
        // D = d x the minimum CCT in an empty network.
        std::map<GroupKey, double> volumes;
        for (const FlowSpec& f : c.flows)
          volumes[{topo.node(f.src), topo.node(f.dst)}] += static_cast<double>(f.bytes);
        std::set<GroupKey> pairs;
        std::vector<GroupDemand> demands;
        for (auto& [key, v] : volumes) {
          pairs.insert(key);
          demands.push_back({key, v});
        }
        std::set<GroupKey> missing;
        for (const GroupKey& p : pairs)
          if (!known.count(p)) missing.insert(p);
        if (!missing.empty()) {
          routes.merge(RouteSet::k_shortest(topo, missing, 15));
          known.insert(missing.begin(), missing.end());
        }
        auto sol = min_cct(demands, topo, caps, routes);
        if (!sol) throw ConfigError("generator produced a disconnected coflow");
        c.deadline_s = *deadline_mult * sol->gamma_s;
      }
      job.coflows.push_back(std::move(c));
    }
    wl.jobs.push_back(std::move(job));
  }
  wl.meta = {{"generator", spec}, {"seed", seed}};
  return wl;
}

}  // namespace terra
