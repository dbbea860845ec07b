#ifndef PPSYNC_H
#define PPSYNC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PpsyncStatus {
  PPSYNC_STATUS_OK = 0,
  PPSYNC_STATUS_NULL_POINTER = 1,
  PPSYNC_STATUS_INVALID_UTF8 = 2,
  PPSYNC_STATUS_CONFIG = 3,
  PPSYNC_STATUS_GRAPH = 4,
  PPSYNC_STATUS_FILTER = 5,
  PPSYNC_STATUS_FUNNEL_VIOLATION = 6,
  PPSYNC_STATUS_NUMERICAL = 7,
  PPSYNC_STATUS_MODEL = 8,
  PPSYNC_STATUS_IO = 9,
  PPSYNC_STATUS_UNKNOWN_EXAMPLE = 10,
  PPSYNC_STATUS_OUT_OF_RANGE = 11,
  PPSYNC_STATUS_BUFFER_TOO_SMALL = 12,
  PPSYNC_STATUS_PANIC = 13,
} PpsyncStatus;

/**
 * Which side of the funnel an error started on.
 */
typedef enum PpsyncBranch {
  PPSYNC_BRANCH_POSITIVE = 0,
  PPSYNC_BRANCH_NEGATIVE = 1,
} PpsyncBranch;

/**
 * The result of one simulation, possibly cut short.
 */
typedef struct PpsyncRun PpsyncRun;

/**
 * A parsed, validated scenario.
 */
typedef struct PpsyncScenario PpsyncScenario;

/**
 * Funnel parameters of one channel.
 */
typedef struct PpsyncPpf {
  double rho0;
  double rho_inf;
  double ell;
  double delta_upper;
  double delta_lower;
} PpsyncPpf;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *ppsync_version(void);

/**
 * Copy the calling thread's last error message into `buf`. Writes an
 * empty string when there is none.
 *
 * # Safety
 * `buf` must be valid for `len` bytes; `needed` may be null.
 */
enum PpsyncStatus ppsync_last_error_message(char *buf, size_t len, size_t *needed);

/**
 * Parse a TOML scenario document.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum PpsyncStatus ppsync_scenario_from_toml(const char *text, struct PpsyncScenario **out);

/**
 * One of the built-in scenarios, `"example1"` or `"example2"`.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum PpsyncStatus ppsync_scenario_builtin(const char *name, struct PpsyncScenario **out);

/**
 * Apply one `section.key=value` override in place. On error the scenario
 * is left unchanged.
 *
 * # Safety
 * `scenario` must come from this library; `assignment` must be a
 * NUL-terminated string.
 */
enum PpsyncStatus ppsync_scenario_set(struct PpsyncScenario *scenario, const char *assignment);

/**
 * Number of agents of a scenario, 0 for a null handle.
 *
 * # Safety
 * `scenario` must be null or come from this library.
 */
size_t ppsync_scenario_agents(const struct PpsyncScenario *scenario);

/**
 * Serialize a scenario back to TOML.
 *
 * # Safety
 * `scenario` must come from this library; `buf` must be valid for `len`
 * bytes; `needed` may be null.
 */
enum PpsyncStatus ppsync_scenario_to_toml(const struct PpsyncScenario *scenario,
                                          char *buf,
                                          size_t len,
                                          size_t *needed);

/**
 * Graph, filter and gain checks without simulating, as a TOML report.
 *
 * # Safety
 * As for [`ppsync_scenario_to_toml`].
 */
enum PpsyncStatus ppsync_scenario_check(const struct PpsyncScenario *scenario,
                                        char *buf,
                                        size_t len,
                                        size_t *needed);

/**
 * # Safety
 * `scenario` must be null or come from this library, and not be used
 * afterwards.
 */
void ppsync_scenario_free(struct PpsyncScenario *scenario);

/**
 * Simulate a scenario. A run that leaves the funnel after the first
 * sample still yields a handle; query it with [`ppsync_run_status`].
 *
 * # Safety
 * `scenario` must come from this library; `out` must be writable.
 */
enum PpsyncStatus ppsync_run(const struct PpsyncScenario *scenario, struct PpsyncRun **out);

/**
 * `PPSYNC_STATUS_OK` if the run reached the horizon, otherwise the category
 * of the error that stopped it.
 *
 * # Safety
 * `run` must come from this library.
 */
enum PpsyncStatus ppsync_run_status(const struct PpsyncRun *run);

/**
 * Whether the run completed with no funnel violation and a finite state.
 *
 * # Safety
 * `run` must be null or come from this library.
 */
bool ppsync_run_passed(const struct PpsyncRun *run);

/**
 * # Safety
 * `run` must be null or come from this library.
 */
size_t ppsync_run_sample_count(const struct PpsyncRun *run);

/**
 * Time of sample `k`.
 *
 * # Safety
 * `run` must come from this library; `out` must be writable.
 */
enum PpsyncStatus ppsync_run_time(const struct PpsyncRun *run, size_t k, double *out);

/**
 * Output `x¹` of one agent and channel (0-based) at sample `k`.
 *
 * # Safety
 * As for [`ppsync_run_time`].
 */
enum PpsyncStatus ppsync_run_output(const struct PpsyncRun *run,
                                    size_t k,
                                    size_t agent,
                                    size_t channel,
                                    double *out);

/**
 * Synchronization error `e¹` of one agent and channel at sample `k`.
 *
 * # Safety
 * As for [`ppsync_run_time`].
 */
enum PpsyncStatus ppsync_run_error(const struct PpsyncRun *run,
                                   size_t k,
                                   size_t agent,
                                   size_t channel,
                                   double *out);

/**
 * Funnel radius of one agent and channel at sample `k`.
 *
 * # Safety
 * As for [`ppsync_run_time`].
 */
enum PpsyncStatus ppsync_run_funnel(const struct PpsyncRun *run,
                                    size_t k,
                                    size_t agent,
                                    size_t channel,
                                    double *out);

/**
 * Control input of one agent and channel at sample `k`.
 *
 * # Safety
 * As for [`ppsync_run_time`].
 */
enum PpsyncStatus ppsync_run_input(const struct PpsyncRun *run,
                                   size_t k,
                                   size_t agent,
                                   size_t channel,
                                   double *out);

/**
 * The run summary as TOML.
 *
 * # Safety
 * `run` must come from this library; `buf` must be valid for `len` bytes;
 * `needed` may be null.
 */
enum PpsyncStatus ppsync_run_summary_toml(const struct PpsyncRun *run,
                                          char *buf,
                                          size_t len,
                                          size_t *needed);

/**
 * Write the full trace as CSV.
 *
 * # Safety
 * `run` must come from this library; `path` must be a NUL-terminated
 * string.
 */
enum PpsyncStatus ppsync_run_write_trace(const struct PpsyncRun *run, const char *path);

/**
 * # Safety
 * `run` must be null or come from this library, and not be used afterwards.
 */
void ppsync_run_free(struct PpsyncRun *run);

/**
 * Transformed error `ε` of an error `e` inside a funnel of radius `rho`.
 *
 * # Safety
 * `params` must point to a valid struct; `out` must be writable.
 */
enum PpsyncStatus ppsync_transform_error(double e,
                                         double rho,
                                         const struct PpsyncPpf *params,
                                         enum PpsyncBranch side,
                                         double *out);

/**
 * Scaling factor `r` of the transformed-error derivative.
 *
 * # Safety
 * As for [`ppsync_transform_error`].
 */
enum PpsyncStatus ppsync_r_factor(double e,
                                  double rho,
                                  const struct PpsyncPpf *params,
                                  enum PpsyncBranch side,
                                  double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PPSYNC_H */
