/* Terra: joint coflow scheduling and multipath WAN routing, with a
 * deterministic flow-level simulator and baseline policies.
 *
 * C API over the C++ core: opaque handles, integer status codes, and a
 * per-thread error message. All functions returning terra_status give
 * TERRA_OK (0) on success; on failure the out parameters are untouched and
 * terra_last_error() describes what went wrong.
 */
#ifndef TERRA_H
#define TERRA_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(TERRA_BUILD)
#    define TERRA_API __declspec(dllexport)
#  else
#    define TERRA_API __declspec(dllimport)
#  endif
#else
#  define TERRA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum terra_status {
  TERRA_OK = 0,
  TERRA_EINVAL = 1,      /* bad arguments or malformed document */
  TERRA_EIO = 2,         /* file could not be read or written */
  TERRA_EPOLICY = 3,     /* unknown policy name */
  TERRA_EINTERNAL = 4    /* solver or simulator failure */
} terra_status;

typedef struct terra_topology terra_topology;
typedef struct terra_workload terra_workload;
typedef struct terra_result terra_result;

typedef struct terra_config {
  double alpha;             /* starvation share, default 0.1 */
  double rho;               /* significant bandwidth-change threshold, 0.25 */
  double eta;               /* deadline admission relaxation, 1.1 */
  int path_count;           /* candidate paths per datacenter pair, 15 */
  double min_volume_bytes;  /* central-scheduling bypass threshold, 0 = off */
  double decision_delay_s;  /* control-plane delay knob, default 0 */
  int record_trace;         /* nonzero: keep the event trace */
} terra_config;

TERRA_API void terra_config_defaults(terra_config* cfg);

TERRA_API const char* terra_version(void);
TERRA_API const char* terra_last_error(void);

/* ---- topology ---------------------------------------------------------- */
TERRA_API terra_status terra_topology_load_file(const char* path, terra_topology** out);
TERRA_API terra_status terra_topology_load_json(const char* json_text, terra_topology** out);
TERRA_API void terra_topology_free(terra_topology* t);

/* ---- workload ---------------------------------------------------------- */
TERRA_API terra_status terra_workload_load_file(const char* path, terra_workload** out);
TERRA_API terra_status terra_workload_load_json(const char* json_text, terra_workload** out);
/* Deterministic generator; gen_spec_json is the generator spec document. */
TERRA_API terra_status terra_workload_generate(const char* gen_spec_json,
                                               const terra_topology* topo, uint64_t seed,
                                               terra_workload** out);
/* Serialized workload document; free with terra_string_free. */
TERRA_API terra_status terra_workload_to_json(const terra_workload* wl, char** out_json);
TERRA_API void terra_workload_free(terra_workload* w);

/* ---- built-in scenarios ------------------------------------------------ */
/* name: figure1 | figure2 | flowgroup. Fills topology, workload and the
 * scenario's preset config (pass cfg = NULL to skip). */
TERRA_API terra_status terra_scenario(const char* name, terra_topology** topo,
                                      terra_workload** wl, terra_config* cfg);

/* ---- simulation -------------------------------------------------------- */
/* policy: terra | perflow | multipath | varys | swan_mcf */
TERRA_API terra_status terra_run(const terra_topology* topo, const terra_workload* wl,
                                 const char* policy, const terra_config* cfg, uint64_t seed,
                                 terra_result** out);

/* Named scalar metrics: avg_cct_s, p95_cct_s, avg_jct_s, p95_jct_s,
 * utilization, makespan_s, coflows, finished, unfinished, jobs,
 * jobs_complete, deadline_total, admitted, rejected, deadline_met,
 * met_fraction, lp_count, rounds, capacity_violations,
 * conservation_violations. Returns TERRA_EINVAL for unknown names. */
TERRA_API terra_status terra_result_metric(const terra_result* r, const char* name,
                                           double* out_value);
/* CSV row for this run (header via terra_metrics_csv_header). */
TERRA_API terra_status terra_result_csv_row(const terra_result* r, const char* workload_name,
                                            char** out_row);
TERRA_API const char* terra_metrics_csv_header(void);
/* Event trace (JSON lines) and scheduler round trace (JSON lines; empty for
 * baseline policies). */
TERRA_API terra_status terra_result_write_trace(const terra_result* r, const char* path);
TERRA_API terra_status terra_result_write_schedule_trace(const terra_result* r,
                                                         const char* path);
TERRA_API void terra_result_free(terra_result* r);

TERRA_API void terra_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* TERRA_H */
