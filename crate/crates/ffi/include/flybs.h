#ifndef FLYBS_H
#define FLYBS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FlybsStatus {
  FLYBS_STATUS_OK = 0,
  FLYBS_STATUS_NULL_POINTER = 1,
  FLYBS_STATUS_INVALID_UTF8 = 2,
  FLYBS_STATUS_CONFIG_ERROR = 3,
  FLYBS_STATUS_DOMAIN_ERROR = 4,
  FLYBS_STATUS_INFEASIBLE = 5,
  FLYBS_STATUS_OUT_OF_RANGE = 6,
  FLYBS_STATUS_NOT_RUN = 7,
  FLYBS_STATUS_INTERNAL = 8,
  FLYBS_STATUS_PANIC = 9,
} FlybsStatus;

/**
 * Opaque simulation handle.
 */
typedef struct FlybsSimulation FlybsSimulation;

/**
 * One simulated timestep.
 */
typedef struct FlybsStepRecord {
  uint64_t drop_index;
  uint64_t k;
  double x;
  double y;
  double z;
  double c_tot;
  double min_c;
  uint32_t iterations;
  bool feasible;
  double p_pr;
  double sum_p;
} FlybsStepRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or NULL.
 *
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *flybs_last_error(void);

/**
 * Creates a simulation from a JSON scenario (`"{}"` gives the defaults).
 *
 * # Safety
 * `config_json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FlybsStatus flybs_simulation_new(const char *config_json, struct FlybsSimulation **out);

/**
 * Releases a simulation; NULL is ignored.
 *
 * # Safety
 * `sim` must come from [`flybs_simulation_new`] and not be used afterwards.
 */
void flybs_simulation_free(struct FlybsSimulation *sim);

/**
 * Runs every drop of the scenario; results replace those of an earlier run.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum FlybsStatus flybs_simulation_run(struct FlybsSimulation *sim);

/**
 * Number of recorded steps over all drops.
 *
 * # Safety
 * `sim` must be a live handle and `out` a valid pointer.
 */
enum FlybsStatus flybs_simulation_step_count(const struct FlybsSimulation *sim, size_t *out);

/**
 * Step `index` counted over the drops in order.
 *
 * # Safety
 * `sim` must be a live handle and `out` a valid pointer.
 */
enum FlybsStatus flybs_simulation_step(const struct FlybsSimulation *sim,
                                       size_t index,
                                       struct FlybsStepRecord *out);

/**
 * Mission-average sum capacity over all drops, bit/s.
 *
 * # Safety
 * `sim` must be a live handle and `out` a valid pointer.
 */
enum FlybsStatus flybs_simulation_mean_sum_capacity(const struct FlybsSimulation *sim, double *out);

/**
 * JSON summary of the last run; release with [`flybs_string_free`].
 *
 * # Safety
 * `sim` must be a live handle and `out` a valid pointer.
 */
enum FlybsStatus flybs_simulation_summary_json(const struct FlybsSimulation *sim, char **out);

/**
 * Releases a string returned by this library; NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void flybs_string_free(char *s);

/**
 * Checks a JSON snapshot (`q_prev`, `nodes`, `power`, optional `limits`).
 *
 * Writes whether a feasible position exists and, if so, one such position.
 *
 * # Safety
 * `snapshot_json` must be NUL-terminated, `feasible` valid and `witness`
 * either NULL or room for three doubles.
 */
enum FlybsStatus flybs_feasibility_check(const char *snapshot_json,
                                         bool *feasible,
                                         double *witness);

/**
 * Capacity-maximizing power split for `n` links.
 *
 * # Safety
 * Every array must hold `n` doubles.
 */
enum FlybsStatus flybs_allocate_power(size_t n,
                                      const double *link_gain,
                                      const double *floor,
                                      const double *bandwidth,
                                      double p_max,
                                      double *out_power);

/**
 * Propulsion power at speed `v` with the reference rotorcraft parameters, W.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum FlybsStatus flybs_propulsion_power(double v, double *out);

/**
 * Speeds whose propulsion power stays within `p_cap`, clipped to `v_max`.
 *
 * # Safety
 * `v_lo` and `v_hi` must be valid pointers.
 */
enum FlybsStatus flybs_speed_interval(double p_cap, double v_max, double *v_lo, double *v_hi);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FLYBS_H */
