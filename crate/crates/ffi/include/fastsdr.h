/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef FASTSDR_H
#define FASTSDR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FastsdrPrecision {
  FASTSDR_PRECISION_SINGLE = 0,
  FASTSDR_PRECISION_DOUBLE = 1,
} FastsdrPrecision;

typedef enum FastsdrSolver {
  FASTSDR_SOLVER_DIRECT = 0,
  FASTSDR_SOLVER_CGD = 1,
  FASTSDR_SOLVER_LEVINSON = 2,
} FastsdrSolver;

/**
 * Status codes returned by every fallible function.
 */
typedef enum FastsdrStatus {
  FASTSDR_STATUS_OK = 0,
  FASTSDR_STATUS_NULL_POINTER = 1,
  FASTSDR_STATUS_INVALID_ARGUMENT = 2,
  FASTSDR_STATUS_VALIDATION = 3,
  FASTSDR_STATUS_SOLVER = 4,
  /**
   * The requested metric was not computed for this result.
   */
  FASTSDR_STATUS_NOT_COMPUTED = 5,
  FASTSDR_STATUS_BUFFER_TOO_SMALL = 6,
  FASTSDR_STATUS_PANIC = 7,
  FASTSDR_STATUS_INTERNAL = 8,
} FastsdrStatus;

/**
 * Opaque evaluation settings.
 */
typedef struct FastsdrConfig FastsdrConfig;

/**
 * Opaque evaluation result.
 */
typedef struct FastsdrResult FastsdrResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *fastsdr_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *fastsdr_version(void);

/**
 * New configuration with the library defaults (L = 512, CGD with 10
 * iterations, double precision, all metrics, permutation resolved).
 */
struct FastsdrConfig *fastsdr_config_new(void);

/**
 * # Safety
 * `cfg` must be NULL or a pointer returned by `fastsdr_config_new` that
 * has not been freed.
 */
void fastsdr_config_free(struct FastsdrConfig *cfg);

/**
 * # Safety
 * `cfg` must be a live configuration handle.
 */
enum FastsdrStatus fastsdr_config_set_filter_length(struct FastsdrConfig *cfg,
                                                    size_t filter_length);

/**
 * # Safety
 * `cfg` must be a live configuration handle.
 */
enum FastsdrStatus fastsdr_config_set_solver(struct FastsdrConfig *cfg, enum FastsdrSolver solver);

/**
 * Iteration cap and early-stop relative residual (0 runs every iteration).
 *
 * # Safety
 * `cfg` must be a live configuration handle.
 */
enum FastsdrStatus fastsdr_config_set_cgd(struct FastsdrConfig *cfg, size_t iters, double tol);

/**
 * # Safety
 * `cfg` must be a live configuration handle.
 */
enum FastsdrStatus fastsdr_config_set_precision(struct FastsdrConfig *cfg,
                                                enum FastsdrPrecision precision);

/**
 * # Safety
 * `cfg` must be a live configuration handle.
 */
enum FastsdrStatus fastsdr_config_set_metrics(struct FastsdrConfig *cfg,
                                              bool sdr,
                                              bool sir,
                                              bool sar);

/**
 * # Safety
 * `cfg` must be a live configuration handle.
 */
enum FastsdrStatus fastsdr_config_set_resolve_permutation(struct FastsdrConfig *cfg, bool resolve);

/**
 * Clamp for cosine metrics; a value `<= 0` restores the precision default.
 *
 * # Safety
 * `cfg` must be a live configuration handle.
 */
enum FastsdrStatus fastsdr_config_set_clamp_epsilon(struct FastsdrConfig *cfg, double epsilon);

/**
 * Evaluates `num_ests` estimates against `num_refs` references, each
 * `len` samples, channel-major. `cfg` may be NULL for the defaults. On
 * success `*out` receives a result handle to release with
 * `fastsdr_result_free`; on failure it is set to NULL.
 *
 * # Safety
 * The signal pointers must reference `num_refs * len` and `num_ests * len`
 * readable doubles; `cfg` must be NULL or live; `out` must be writable.
 */
enum FastsdrStatus fastsdr_bss_eval(const struct FastsdrConfig *cfg,
                                    const double *references,
                                    size_t num_refs,
                                    const double *estimates,
                                    size_t num_ests,
                                    size_t len,
                                    struct FastsdrResult **out);

/**
 * Scale-invariant SDR: `fastsdr_bss_eval` with a one-tap filter.
 *
 * # Safety
 * Same contract as `fastsdr_bss_eval`.
 */
enum FastsdrStatus fastsdr_si_sdr(const struct FastsdrConfig *cfg,
                                  const double *references,
                                  size_t num_refs,
                                  const double *estimates,
                                  size_t num_ests,
                                  size_t len,
                                  struct FastsdrResult **out);

/**
 * # Safety
 * `res` must be NULL or a live result handle.
 */
void fastsdr_result_free(struct FastsdrResult *res);

/**
 * Number of reference channels, or 0 for NULL.
 *
 * # Safety
 * `res` must be NULL or a live result handle.
 */
size_t fastsdr_result_num_refs(const struct FastsdrResult *res);

/**
 * Number of estimate channels, or 0 for NULL.
 *
 * # Safety
 * `res` must be NULL or a live result handle.
 */
size_t fastsdr_result_num_ests(const struct FastsdrResult *res);

/**
 * Copies SDR in dB, `num_refs × num_ests` row-major, into `out`.
 *
 * # Safety
 * `res` must be live and `out` must hold `capacity` doubles.
 */
enum FastsdrStatus fastsdr_result_sdr(const struct FastsdrResult *res,
                                      double *out,
                                      size_t capacity);

/**
 * Copies SIR in dB, `num_refs × num_ests` row-major, into `out`.
 *
 * # Safety
 * `res` must be live and `out` must hold `capacity` doubles.
 */
enum FastsdrStatus fastsdr_result_sir(const struct FastsdrResult *res,
                                      double *out,
                                      size_t capacity);

/**
 * Copies SAR in dB, one value per estimate, into `out`.
 *
 * # Safety
 * `res` must be live and `out` must hold `capacity` doubles.
 */
enum FastsdrStatus fastsdr_result_sar(const struct FastsdrResult *res,
                                      double *out,
                                      size_t capacity);

/**
 * Copies the raw cosine metrics `c`, `num_refs × num_ests` row-major.
 *
 * # Safety
 * `res` must be live and `out` must hold `capacity` doubles.
 */
enum FastsdrStatus fastsdr_result_cosine(const struct FastsdrResult *res,
                                         double *out,
                                         size_t capacity);

/**
 * Copies the estimate index assigned to each reference (`num_refs`
 * values, -1 where unassigned).
 *
 * # Safety
 * `res` must be live and `out` must hold `capacity` values.
 */
enum FastsdrStatus fastsdr_result_permutation(const struct FastsdrResult *res,
                                              int64_t *out,
                                              size_t capacity);

/**
 * Number of systems that fell back to the direct solver, or 0 for NULL.
 *
 * # Safety
 * `res` must be NULL or a live result handle.
 */
size_t fastsdr_result_fallbacks(const struct FastsdrResult *res);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FASTSDR_H */
