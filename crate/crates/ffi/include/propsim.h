#ifndef PROPSIM_H
#define PROPSIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum PropsimStatus {
  PROPSIM_STATUS_OK = 0,
  PROPSIM_STATUS_NULL_ARGUMENT = 1,
  PROPSIM_STATUS_INVALID_UTF8 = 2,
  PROPSIM_STATUS_SCHEMA_ERROR = 3,
  PROPSIM_STATUS_RANGE_ERROR = 4,
  PROPSIM_STATUS_DEGENERATE_DENOMINATOR = 5,
  PROPSIM_STATUS_NO_ROOT_FOUND = 6,
  PROPSIM_STATUS_MATURITY_COLLAPSE = 7,
  PROPSIM_STATUS_UNDEFINED_CRITICAL = 8,
  PROPSIM_STATUS_IMPACT_MODEL_MISMATCH = 9,
  PROPSIM_STATUS_INVALID_AXIS = 10,
  PROPSIM_STATUS_INDEX_OUT_OF_BOUNDS = 11,
  PROPSIM_STATUS_PANIC = 99,
} PropsimStatus;

/**
 * Why a trajectory stopped.
 */
typedef enum PropsimTermination {
  PROPSIM_TERMINATION_HORIZON_REACHED = 0,
  PROPSIM_TERMINATION_BANKRUPT = 1,
  PROPSIM_TERMINATION_DEGENERATE_DENOMINATOR = 2,
  PROPSIM_TERMINATION_MATURITY_COLLAPSE = 3,
  PROPSIM_TERMINATION_NUMERICAL_OVERFLOW = 4,
} PropsimTermination;

/**
 * Opaque scenario handle.
 */
typedef struct PropsimScenario PropsimScenario;

/**
 * Opaque trajectory handle.
 */
typedef struct PropsimTrajectory PropsimTrajectory;

/**
 * One recorded fund state.
 */
typedef struct PropsimState {
  /**
   * Years since the start.
   */
  double t;
  /**
   * Capital, millions.
   */
  double capital;
  /**
   * Average maturity of the book, years.
   */
  double avg_maturity;
  /**
   * Implied mark, vol points.
   */
  double implied;
  /**
   * Vega notional, millions per vol point.
   */
  double vega;
} PropsimState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread. Never null.
 */
const char *propsim_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *propsim_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void propsim_string_free(char *s);

/**
 * The built-in reference scenario.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum PropsimStatus propsim_scenario_reference(struct PropsimScenario **out);

/**
 * Parses and validates a scenario JSON document.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum PropsimStatus propsim_scenario_from_json(const char *json, struct PropsimScenario **out);

/**
 * Canonical JSON of a scenario, defaults resolved. Free with
 * `propsim_string_free`.
 *
 * # Safety
 * `scenario` must be a live handle; `out` must be valid for writes.
 */
enum PropsimStatus propsim_scenario_to_json(const struct PropsimScenario *scenario, char **out);

/**
 * # Safety
 * `scenario` must be null or a live handle, and is dangling afterwards.
 */
void propsim_scenario_free(struct PropsimScenario *scenario);

/**
 * Runs the scenario to termination.
 *
 * # Safety
 * `scenario` must be a live handle; `out` must be valid for writes.
 */
enum PropsimStatus propsim_simulate(const struct PropsimScenario *scenario,
                                    struct PropsimTrajectory **out);

/**
 * Number of recorded states (steps + 1); 0 for a null handle.
 *
 * # Safety
 * `traj` must be null or a live handle.
 */
size_t propsim_trajectory_len(const struct PropsimTrajectory *traj);

/**
 * # Safety
 * `traj` must be a live handle; `out` must be valid for writes.
 */
enum PropsimStatus propsim_trajectory_state(const struct PropsimTrajectory *traj,
                                            size_t index,
                                            struct PropsimState *out);

/**
 * # Safety
 * `traj` must be a live handle; `out` must be valid for writes.
 */
enum PropsimStatus propsim_trajectory_termination(const struct PropsimTrajectory *traj,
                                                  enum PropsimTermination *out);

/**
 * Trajectory CSV text. Free with `propsim_string_free`.
 *
 * # Safety
 * `traj` must be a live handle; `out` must be valid for writes.
 */
enum PropsimStatus propsim_trajectory_to_csv(const struct PropsimTrajectory *traj, char **out);

/**
 * Reads a trajectory back from its CSV text.
 *
 * # Safety
 * `csv` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum PropsimStatus propsim_trajectory_from_csv(const char *csv, struct PropsimTrajectory **out);

/**
 * # Safety
 * `traj` must be null or a live handle, and is dangling afterwards.
 */
void propsim_trajectory_free(struct PropsimTrajectory *traj);

/**
 * Regime report as one JSON object, using the scenario's thresholds.
 * Free with `propsim_string_free`.
 *
 * # Safety
 * `traj` must be a live handle; `out` must be valid for writes.
 */
enum PropsimStatus propsim_classify_json(const struct PropsimTrajectory *traj, char **out);

/**
 * Critical capital for `kappa` and `lambda`. Pass NaN as `maturity` to skip
 * the exact value, which is then written as NaN. `exact_out` may be null.
 *
 * # Safety
 * `approx_out` must be valid for writes; `exact_out` null or valid.
 */
enum PropsimStatus propsim_critical_capital(double kappa,
                                            double lambda,
                                            double maturity,
                                            double dt,
                                            double *approx_out,
                                            double *exact_out);

/**
 * Largest Lyapunov exponent (per year) and the steps it was measured over.
 * `steps_out` may be null.
 *
 * # Safety
 * `scenario` must be a live handle; `exponent_out` valid for writes.
 */
enum PropsimStatus propsim_lyapunov(const struct PropsimScenario *scenario,
                                    double epsilon,
                                    double *exponent_out,
                                    size_t *steps_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PROPSIM_H */
