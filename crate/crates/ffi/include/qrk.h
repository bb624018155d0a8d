#ifndef QRK_H
#define QRK_H

/* This file is generated by cbindgen from qrk-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum QrkStatus {
  QrkStatus_Ok = 0,
  QrkStatus_NullPointer = 1,
  QrkStatus_InvalidArgument = 2,
  QrkStatus_ParameterDomain = 3,
  QrkStatus_ParseError = 4,
  QrkStatus_InvariantViolation = 5,
  QrkStatus_NoConvergence = 6,
  QrkStatus_TooManySubsets = 7,
  QrkStatus_CertificateUnavailable = 8,
  QrkStatus_IoError = 9,
  QrkStatus_Panic = 10,
} QrkStatus;

/**
 * Corruption models exposed over the C ABI.
 */
typedef enum QrkCorruptionModel {
  /**
   * `param` = gaussian scale; pass NaN for the default 10 * ||b_true||_inf.
   */
  QrkCorruptionModel_RandomGaussian = 0,
  /**
   * `param` = the constant offset.
   */
  QrkCorruptionModel_ConstantOffset = 1,
  QrkCorruptionModel_SignFlip = 2,
  QrkCorruptionModel_AlignedCluster = 3,
} QrkCorruptionModel;

/**
 * Row-selection strategies exposed over the C ABI.
 */
typedef enum QrkStrategy {
  QrkStrategy_Uniform = 0,
  QrkStrategy_Quantile = 1,
  QrkStrategy_SampledQuantile = 2,
  QrkStrategy_Motzkin = 3,
  QrkStrategy_Powered = 4,
} QrkStrategy;

/**
 * Subset-extremal estimation methods.
 */
typedef enum QrkSubsetMethod {
  /**
   * Exact enumeration (refuses beyond the subset cap).
   */
  QrkSubsetMethod_Exact = 0,
  /**
   * `budget` random subsets; min results are upper bounds.
   */
  QrkSubsetMethod_Sampled = 1,
  /**
   * `budget` random directions; min results are upper bounds.
   */
  QrkSubsetMethod_Greedy = 2,
} QrkSubsetMethod;

/**
 * Opaque system handle.
 */
typedef struct QrkSystem QrkSystem;

/**
 * Opaque solver-trace handle.
 */
typedef struct QrkTrace QrkTrace;

/**
 * Spectral picture of a system at (q, beta). `sigma_beta_max` and `rate_c`
 * are NaN when absent; `sub_min_is_exact` is 0 for sampled/greedy estimates.
 */
typedef struct QrkSpectralSummary {
  double sigma_max;
  double sigma_sub_min;
  int32_t sub_min_is_exact;
  size_t subset_size;
  double sigma_beta_max;
  double condition_lhs;
  double condition_rhs;
  double rate_c;
} QrkSpectralSummary;

/**
 * Truncated-Gaussian heuristic values at mass = q - beta, plus the certified
 * threshold beta* for the q alone.
 */
typedef struct QrkHeuristic {
  double mass;
  double alpha;
  double ratio;
  double beta_star;
} QrkHeuristic;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread. Never null; empty
 * before the first failure. Valid until the next failing call.
 */
const char *qrk_last_error_message(void);

/**
 * Generate an uncorrupted random system (rows uniform on the sphere).
 *
 * # Safety
 * `out` must be a valid pointer to a `QrkSystem*` slot.
 */
enum QrkStatus qrk_system_generate(size_t m, size_t n, uint64_t seed, struct QrkSystem **out);

/**
 * Load a system from the text format written by [`qrk_system_save`].
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` a valid slot.
 */
enum QrkStatus qrk_system_load(const char *path, struct QrkSystem **out);

/**
 * # Safety
 * `sys` must be a live handle from this library; `path` a valid string.
 */
enum QrkStatus qrk_system_save(const struct QrkSystem *sys, const char *path);

/**
 * Apply a corruption model to `sys`, producing a new system handle. `param`
 * is the model parameter (see [`QrkCorruptionModel`]); NaN selects defaults.
 *
 * # Safety
 * `sys` must be a live handle; `out` a valid slot.
 */
enum QrkStatus qrk_system_corrupt(const struct QrkSystem *sys,
                                  double beta,
                                  enum QrkCorruptionModel model,
                                  double param,
                                  uint64_t seed,
                                  struct QrkSystem **out);

/**
 * Row count; 0 for a null handle.
 *
 * # Safety
 * `sys` must be a live handle or null.
 */
size_t qrk_system_rows(const struct QrkSystem *sys);

/**
 * Column count; 0 for a null handle.
 *
 * # Safety
 * `sys` must be a live handle or null.
 */
size_t qrk_system_cols(const struct QrkSystem *sys);

/**
 * Number of corrupted right-hand-side entries.
 *
 * # Safety
 * `sys` must be a live handle or null.
 */
size_t qrk_system_corrupt_count(const struct QrkSystem *sys);

/**
 * # Safety
 * `sys` must be a handle from this library, not yet freed; null is a no-op.
 */
void qrk_system_free(struct QrkSystem *sys);

/**
 * Run a solver. Strategy parameters: `q` for Quantile/SampledQuantile, `t`
 * for SampledQuantile, `p` for Powered; ignored otherwise. With
 * `use_ground_truth` false the run is blind (budget mode only, trace errors
 * are NaN).
 *
 * # Safety
 * `sys` must be a live handle; `out` a valid slot.
 */
enum QrkStatus qrk_solve(const struct QrkSystem *sys,
                         enum QrkStrategy strategy,
                         double q,
                         size_t t,
                         double p,
                         size_t max_iters,
                         double stop_tol,
                         uint64_t seed,
                         bool use_ground_truth,
                         struct QrkTrace **out);

/**
 * # Safety
 * `trace` must be a live handle or null.
 */
size_t qrk_trace_iterations(const struct QrkTrace *trace);

/**
 * Final squared error to the ground truth; NaN for blind runs or null.
 *
 * # Safety
 * `trace` must be a live handle or null.
 */
double qrk_trace_final_err_sq(const struct QrkTrace *trace);

/**
 * 1 when the run stopped on the error tolerance, 0 otherwise.
 *
 * # Safety
 * `trace` must be a live handle or null.
 */
int32_t qrk_trace_converged(const struct QrkTrace *trace);

/**
 * Write the per-iteration CSV trace.
 *
 * # Safety
 * `trace` must be a live handle; `path` a valid string.
 */
enum QrkStatus qrk_trace_write_csv(const struct QrkTrace *trace, const char *path);

/**
 * # Safety
 * `trace` must be a handle from this library, not yet freed; null is a no-op.
 */
void qrk_trace_free(struct QrkTrace *trace);

/**
 * Spectral summary of a system at (q, beta). `budget` is the trial count for
 * Sampled or the direction count for Greedy; ignored for Exact.
 *
 * # Safety
 * `sys` must be a live handle; `out` a valid pointer.
 */
enum QrkStatus qrk_spectral_summary(const struct QrkSystem *sys,
                                    double q,
                                    double beta,
                                    enum QrkSubsetMethod method,
                                    size_t budget,
                                    uint64_t seed,
                                    struct QrkSpectralSummary *out);

/**
 * Truncated-Gaussian heuristic at mass = q - beta, plus the corollary
 * threshold beta* for q.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum QrkStatus qrk_heuristic(double q, double beta, struct QrkHeuristic *out);

/**
 * Left-hand side of the convergence condition.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum QrkStatus qrk_condition_lhs(double q, double beta, double *out);

/**
 * Rate constant c for the given spectral values; NaN when the condition
 * fails (no certificate).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum QrkStatus qrk_convergence_rate(double sigma_max,
                                    double sigma_sub_min,
                                    double q,
                                    double beta,
                                    size_t m,
                                    double *out);

/**
 * Largest beta certified by the Gaussian heuristic at quantile q.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum QrkStatus qrk_corollary_threshold(double q, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QRK_H */
