#ifndef DRIFTSIM_H
#define DRIFTSIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DsStatus {
  DS_STATUS_OK = 0,
  DS_STATUS_NULL_POINTER = 1,
  DS_STATUS_INVALID_CONFIG = 2,
  DS_STATUS_NOT_APPLICABLE = 3,
  DS_STATUS_INVALID_UTF8 = 4,
  DS_STATUS_PANIC = 5,
} DsStatus;

/**
 * Opaque validated experiment configuration.
 */
typedef struct DsExperiment DsExperiment;

/**
 * Opaque validated scenario.
 */
typedef struct DsScenario DsScenario;

/**
 * Opaque per-step estimates produced by [`ds_experiment_run`].
 */
typedef struct DsSeries DsSeries;

/**
 * Scenario inputs for the closed-form queries.
 */
typedef struct DsScenarioParams {
  double alpha;
  double beta;
  double x0;
  double u0;
  double gamma0;
  double kappa;
  double delta;
  double lambda;
  uint64_t horizon;
} DsScenarioParams;

/**
 * The finite-horizon advantage bound and its intermediate quantities.
 */
typedef struct DsAdvantageBound {
  uint64_t min_clicks;
  uint64_t min_skips;
  double click_rate_lb;
  double fixed_drift;
  double one_reduction_opinion;
  double clean_return_prob;
  double adaptive_drift_ub;
  double lambda_star;
} DsAdvantageBound;

/**
 * Monte Carlo estimates at one step.
 */
typedef struct DsStepEstimate {
  uint64_t k;
  double mean_opinion;
  double se_opinion;
  double mean_utility;
  double se_utility;
  double mean_payoff;
  double se_payoff;
  double mean_gamma;
  double se_gamma;
} DsStepEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a
 * success. Valid until the next call into this library on the same thread.
 */
const char *ds_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ds_version(void);

/**
 * One opinion update.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum DsStatus ds_step(double x_prev,
                      double x0,
                      double u_prev,
                      bool clicked,
                      double alpha,
                      double beta,
                      double *out);

/**
 * Opinion after a click sequence (`clicks[i] != 0` means a click), and
 * the weight on the recommendation.
 *
 * # Safety
 * `clicks` must point to `len` bytes (or be null with `len == 0`); the
 * out-pointers must be valid for writes.
 */
enum DsStatus ds_ex_post_opinion(double x0,
                                 double u0,
                                 const uint8_t *clicks,
                                 size_t len,
                                 double alpha,
                                 double beta,
                                 double *out_opinion,
                                 double *out_weight);

/**
 * Validates `params` and returns a scenario handle in `out`.
 *
 * # Safety
 * `params` must be readable and `out` writable.
 */
enum DsStatus ds_scenario_new(const struct DsScenarioParams *params, struct DsScenario **out);

/**
 * # Safety
 * `scenario` must come from [`ds_scenario_new`] and not be used afterwards.
 */
void ds_scenario_free(struct DsScenario *scenario);

/**
 * Expected opinion at step `k` under the fixed policy.
 *
 * # Safety
 * `scenario` must be a live handle and `out` writable.
 */
enum DsStatus ds_scenario_expected_opinion(const struct DsScenario *scenario,
                                           uint64_t k,
                                           double *out);

/**
 * Long-run expected opinion under the fixed policy.
 *
 * # Safety
 * `scenario` must be a live handle and `out` writable.
 */
enum DsStatus ds_scenario_limit_fixed(const struct DsScenario *scenario, double *out);

/**
 * Long-run expected opinion under the adaptive policy.
 *
 * # Safety
 * `scenario` must be a live handle and `out` writable.
 */
enum DsStatus ds_scenario_limit_adaptive(const struct DsScenario *scenario, double *out);

/**
 * Consumption weight above which the fixed policy wins in the long run.
 *
 * # Safety
 * `scenario` must be a live handle and `out` writable.
 */
enum DsStatus ds_scenario_lambda_threshold(const struct DsScenario *scenario, double *out);

/**
 * Finite-horizon bound below which the adaptive policy wins.
 *
 * # Safety
 * `scenario` must be a live handle and `out` writable.
 */
enum DsStatus ds_scenario_advantage_bound(const struct DsScenario *scenario,
                                          struct DsAdvantageBound *out);

/**
 * Parses and validates an experiment configuration given as JSON, with
 * the same field names as the Rust `ExperimentConfig`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` writable.
 */
enum DsStatus ds_experiment_from_json(const char *json, struct DsExperiment **out);

/**
 * # Safety
 * `experiment` must come from [`ds_experiment_from_json`] and not be used
 * afterwards.
 */
void ds_experiment_free(struct DsExperiment *experiment);

/**
 * Runs all trials and returns the per-step estimates in `out`.
 *
 * # Safety
 * `experiment` must be a live handle and `out` writable.
 */
enum DsStatus ds_experiment_run(const struct DsExperiment *experiment, struct DsSeries **out);

/**
 * Number of steps in the series (`horizon + 1`); 0 for a null handle.
 *
 * # Safety
 * `series` must be null or a live handle.
 */
size_t ds_series_len(const struct DsSeries *series);

/**
 * Copies the estimates at position `index` into `out`.
 *
 * # Safety
 * `series` must be a live handle and `out` writable.
 */
enum DsStatus ds_series_get(const struct DsSeries *series,
                            size_t index,
                            struct DsStepEstimate *out);

/**
 * # Safety
 * `series` must come from [`ds_experiment_run`] and not be used afterwards.
 */
void ds_series_free(struct DsSeries *series);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DRIFTSIM_H */
