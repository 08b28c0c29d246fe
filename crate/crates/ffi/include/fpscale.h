#ifndef FPSCALE_H
#define FPSCALE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum FpsStatus {
  FPS_STATUS_OK = 0,
  FPS_STATUS_NULL_POINTER = 1,
  FPS_STATUS_ARGUMENT = 2,
  FPS_STATUS_SIZE = 3,
  FPS_STATUS_DATA = 4,
  FPS_STATUS_DEGENERATE = 5,
  FPS_STATUS_NUMERICAL = 6,
  FPS_STATUS_IO = 7,
  FPS_STATUS_PANIC = 8,
} FpsStatus;

typedef enum FpsKind {
  FPS_KIND_GMD = 0,
  FPS_KIND_VAR = 1,
} FpsKind;

typedef enum FpsModel {
  FPS_MODEL_NORMAL = 0,
  FPS_MODEL_EXPONENTIAL = 1,
  /**
   * Uses the `shape` argument.
   */
  FPS_MODEL_GAMMA = 2,
} FpsModel;

/**
 * Opaque finite population.
 */
typedef struct FpsPopulation FpsPopulation;

/**
 * Opaque sample drawn without replacement.
 */
typedef struct FpsSample FpsSample;

/**
 * Parameters of the one-term Edgeworth expansion.
 */
typedef struct FpsEdgeworthParams {
  double alpha;
  double kappa;
  double tau_sq;
  size_t n;
  size_t pop_size;
} FpsEdgeworthParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *fps_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *fps_version(void);

/**
 * Builds a population from `len` values.
 *
 * # Safety
 * `values` must point to `len` readable doubles; `out` must be writable.
 */
enum FpsStatus fps_population_new(const double *values, size_t len, struct FpsPopulation **out);

/**
 * # Safety
 * `pop` must come from [`fps_population_new`] and not be freed yet; NULL is ignored.
 */
void fps_population_free(struct FpsPopulation *pop);

/**
 * # Safety
 * `pop` must be a live handle.
 */
size_t fps_population_len(const struct FpsPopulation *pop);

/**
 * Population parameter `G` or `V`.
 *
 * # Safety
 * `pop` must be a live handle and `out` writable.
 */
enum FpsStatus fps_population_scale(const struct FpsPopulation *pop, enum FpsKind k, double *out);

/**
 * Exact variance of the U-statistic for samples of size `n`.
 *
 * # Safety
 * `pop` must be a live handle and `out` writable.
 */
enum FpsStatus fps_u_variance(const struct FpsPopulation *pop,
                              size_t n,
                              enum FpsKind k,
                              double *out);

/**
 * Variance components `σ₁²`, `σ₂²`.
 *
 * # Safety
 * `pop` must be a live handle; `sigma1_sq` and `sigma2_sq` writable.
 */
enum FpsStatus fps_sigma_components(const struct FpsPopulation *pop,
                                    size_t n,
                                    enum FpsKind k,
                                    double *sigma1_sq,
                                    double *sigma2_sq);

/**
 * True Edgeworth parameters of the population.
 *
 * # Safety
 * `pop` must be a live handle and `out` writable.
 */
enum FpsStatus fps_edgeworth_params_true(const struct FpsPopulation *pop,
                                         size_t n,
                                         enum FpsKind k,
                                         struct FpsEdgeworthParams *out);

/**
 * Builds a sample of `len` values from a population of `parent_n` units.
 *
 * # Safety
 * `values` must point to `len` readable doubles; `out` must be writable.
 */
enum FpsStatus fps_sample_new(const double *values,
                              size_t len,
                              size_t parent_n,
                              struct FpsSample **out);

/**
 * # Safety
 * `s` must come from [`fps_sample_new`] and not be freed yet; NULL is ignored.
 */
void fps_sample_free(struct FpsSample *s);

/**
 * `U_G` or `U_V` of the sample.
 *
 * # Safety
 * `s` must be a live handle and `out` writable.
 */
enum FpsStatus fps_sample_statistic(const struct FpsSample *s, enum FpsKind k, double *out);

/**
 * Jackknife variance `S²`.
 *
 * # Safety
 * `s` must be a live handle and `out` writable.
 */
enum FpsStatus fps_sample_jackknife(const struct FpsSample *s, enum FpsKind k, double *out);

/**
 * Plug-in estimate of `Var U`.
 *
 * # Safety
 * `s` must be a live handle and `out` writable.
 */
enum FpsStatus fps_sample_variance_hat(const struct FpsSample *s, enum FpsKind k, double *out);

/**
 * Plug-in Edgeworth parameters from the sample.
 *
 * # Safety
 * `s` must be a live handle and `out` writable.
 */
enum FpsStatus fps_sample_edgeworth_params(const struct FpsSample *s,
                                           enum FpsKind k,
                                           struct FpsEdgeworthParams *out);

/**
 * Bootstrap quantiles of the Studentized statistic at `nq` levels.
 *
 * # Safety
 * `s` must be a live handle; `q` must point to `nq` doubles and `out` to
 * `nq` writable doubles.
 */
enum FpsStatus fps_bootstrap_quantiles(const struct FpsSample *s,
                                       enum FpsKind k,
                                       size_t outer_populations,
                                       size_t inner_resamples,
                                       uint64_t seed,
                                       const double *q,
                                       size_t nq,
                                       double *out);

/**
 * One-term Edgeworth expansion `H(y)`, unclamped. Returns NaN for a NULL
 * or invalid `params`.
 *
 * # Safety
 * `params` must be NULL or readable.
 */
double fps_edgeworth_cdf(const struct FpsEdgeworthParams *params, double y);

/**
 * Solves `H(y) = q` on `[-12, 12]`.
 *
 * # Safety
 * `params` must be readable and `out` writable.
 */
enum FpsStatus fps_edgeworth_quantile(const struct FpsEdgeworthParams *params,
                                      double q,
                                      double *out);

/**
 * Standard normal distribution function.
 */
double fps_normal_cdf(double y);

/**
 * Standard normal quantile for `q` in (0, 1).
 *
 * # Safety
 * `out` must be writable.
 */
enum FpsStatus fps_normal_quantile(double q, double *out);

/**
 * Bias correction `a` of strategy S1; `shape` is read only for the gamma model.
 *
 * # Safety
 * `out` must be writable.
 */
enum FpsStatus fps_correction_factor(enum FpsModel model, double shape, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FPSCALE_H */
