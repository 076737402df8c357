#ifndef PIPEPERF_H
#define PIPEPERF_H

/* Generated by cbindgen from the pipeperf-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a C-ABI call.
 */
typedef enum PpStatus {
  /**
   * Success; output parameters are valid.
   */
  PP_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  PP_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  PP_STATUS_INVALID_UTF8 = 2,
  /**
   * An argument violated a documented precondition.
   */
  PP_STATUS_INVALID_ARGUMENT = 3,
  /**
   * Textual input (spec string, trace file, metadata) failed to parse.
   */
  PP_STATUS_PARSE_ERROR = 4,
  /**
   * A file could not be read or written.
   */
  PP_STATUS_IO_ERROR = 5,
  /**
   * Input data is structurally valid but unusable (empty, degenerate,
   * inconsistent matrix, ...).
   */
  PP_STATUS_DATA_ERROR = 6,
  /**
   * A numerical routine failed (fit divergence, quadrature failure,
   * degenerate hyper-model).
   */
  PP_STATUS_NUMERICAL_ERROR = 7,
  /**
   * The caller-provided buffer is too small; the required size was
   * reported through the size output parameter.
   */
  PP_STATUS_BUFFER_TOO_SMALL = 8,
  /**
   * An unexpected internal panic was caught at the boundary.
   */
  PP_STATUS_INTERNAL_PANIC = 9,
} PpStatus;

/**
 * Opaque distribution handle.
 */
typedef struct PpDist PpDist;

/**
 * Opaque timing-trace handle.
 */
typedef struct PpTrace PpTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the message of the most recent failing call on this thread into
 * `buf` (NUL-terminated, truncated to `cap` bytes) and returns the size in
 * bytes the full message needs, including the terminating NUL. `buf` may be
 * null when only the size is wanted.
 */
size_t pp_last_error_message(char *buf, size_t cap);

/**
 * Creates a uniform distribution on [a, a + s] (`s = 0` is a point mass).
 */
enum PpStatus pp_dist_uniform(double a, double s, struct PpDist **out);

/**
 * Creates a Johnson S_U distribution with shape (a, b), location, and scale.
 */
enum PpStatus pp_dist_johnson_su(double a, double b, double loc, double scale, struct PpDist **out);

/**
 * Creates the empirical (step) distribution of `len` finite values.
 */
enum PpStatus pp_dist_empirical(const double *values, size_t len, struct PpDist **out);

/**
 * Parses a textual spec like `uniform;a=0;s=1` or
 * `johnsonsu;a=-0.5;b=2;loc=1e-3;scale=2e-4`.
 */
enum PpStatus pp_dist_parse(const char *text, struct PpDist **out);

/**
 * Writes the canonical textual form of `dist` into `buf` (NUL-terminated).
 * `needed` always receives the full size in bytes including the NUL; when
 * `cap` is too small nothing is written and `PP_STATUS_BUFFER_TOO_SMALL` is
 * returned.
 */
enum PpStatus pp_dist_format(const struct PpDist *dist, char *buf, size_t cap, size_t *needed);

/**
 * Releases a distribution handle. Null is a no-op.
 */
void pp_dist_free(struct PpDist *dist);

/**
 * Mean of the distribution.
 */
enum PpStatus pp_dist_mean(const struct PpDist *dist, double *out);

/**
 * Probability density at `x`. Point masses have no density at their atom.
 */
enum PpStatus pp_dist_pdf(const struct PpDist *dist, double x, double *out);

/**
 * Cumulative distribution function at `x`.
 */
enum PpStatus pp_dist_cdf(const struct PpDist *dist, double x, double *out);

/**
 * Fills `out` with `len` draws from the stream keyed by `seed`. The same
 * (distribution, seed, len) always produces the same values.
 */
enum PpStatus pp_dist_sample(const struct PpDist *dist, uint64_t seed, double *out, size_t len);

/**
 * Fits a uniform distribution to a sample (min/range estimator).
 */
enum PpStatus pp_fit_uniform(const double *values, size_t len, struct PpDist **out);

/**
 * Fits a Johnson S_U distribution by maximum likelihood. `log_likelihood`
 * may be null when the attained log-likelihood is not wanted.
 */
enum PpStatus pp_fit_johnson_su(const double *values,
                                size_t len,
                                uint64_t seed,
                                double *log_likelihood,
                                struct PpDist **out);

/**
 * Sum of squared differences between the fitted density and a `bins`-bin
 * histogram of the sample.
 */
enum PpStatus pp_goodness_sse(const struct PpDist *dist,
                              const double *values,
                              size_t len,
                              size_t bins,
                              double *out);

/**
 * Expected maximum of `n` independent draws from the distribution.
 */
enum PpStatus pp_expected_max(const struct PpDist *dist, size_t n, double *out);

/**
 * Total of `iterations` synchronized iterations, each costing the expected
 * maximum over `n` processes.
 */
enum PpStatus pp_stationary_barrier_total(const struct PpDist *dist,
                                          size_t iterations,
                                          size_t n,
                                          double *out);

/**
 * Total of `iterations` overlap-friendly iterations at the distribution mean.
 */
enum PpStatus pp_stationary_pipelined_total(const struct PpDist *dist,
                                            size_t iterations,
                                            double *out);

/**
 * Moment bound mu + sigma (n-1)/sqrt(2n-1) on the expected maximum of `n`
 * i.i.d. draws.
 */
double pp_cramer_bound(double mu, double sigma, size_t n);

/**
 * Distribution-free bound mu + sigma sqrt(n-1) valid under arbitrary
 * dependence.
 */
double pp_bertsimas_bound(double mu, double sigma, size_t n);

/**
 * Two-sample Kolmogorov-Smirnov statistic (tie-aware).
 */
enum PpStatus pp_ks_statistic(const double *first,
                              size_t first_len,
                              const double *second,
                              size_t second_len,
                              double *out);

/**
 * Rejection threshold c(alpha) sqrt((n+m)/(nm)) for tabulated alpha levels
 * (0.10, 0.05, 0.025, 0.01, 0.005, 0.001).
 */
enum PpStatus pp_ks_threshold(size_t n, size_t m, double alpha, double *out);

/**
 * Loads a trace CSV and its `.meta` sidecar from `path` (UTF-8).
 */
enum PpStatus pp_trace_load(const char *path, struct PpTrace **out);

/**
 * Releases a trace handle. Null is a no-op.
 */
void pp_trace_free(struct PpTrace *t);

/**
 * Number of iterations (rows).
 */
enum PpStatus pp_trace_iterations(const struct PpTrace *t, size_t *out);

/**
 * Number of processes (columns).
 */
enum PpStatus pp_trace_processes(const struct PpTrace *t, size_t *out);

/**
 * New trace with the restart-cycle fill iterations removed (identity for
 * traces without fill).
 */
enum PpStatus pp_trace_filter_fill(const struct PpTrace *t, struct PpTrace **out);

/**
 * Total runtime under synchronized semantics: sum over iterations of the
 * slowest process.
 */
enum PpStatus pp_trace_eval_barrier(const struct PpTrace *t, double *out);

/**
 * Total runtime under overlapped semantics: slowest process's summed work.
 */
enum PpStatus pp_trace_eval_pipeline(const struct PpTrace *t, double *out);

/**
 * Per-iteration uniform fits: writes each iteration's minimum into `a_out`
 * and span into `s_out`. Both arrays must hold exactly
 * `pp_trace_iterations` values.
 */
enum PpStatus pp_trace_iteration_fits(const struct PpTrace *t,
                                      double *a_out,
                                      double *s_out,
                                      size_t len);

/**
 * Monte Carlo runtime prediction from hyper-distributions of the
 * per-iteration uniform minimum (`a_dist`) and span (`s_dist`): mean total
 * over `replicates` independent parameter draws. `pipelined` selects the
 * overlapped semantics; otherwise each iteration costs the expected maximum
 * over `processes`. `clamped_out` (nullable) receives the number of negative
 * span draws clamped to zero.
 */
enum PpStatus pp_mc_predict_hyper(const struct PpDist *a_dist,
                                  const struct PpDist *s_dist,
                                  size_t iterations,
                                  size_t processes,
                                  bool pipelined,
                                  uint64_t seed,
                                  size_t replicates,
                                  double *total_out,
                                  size_t *clamped_out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* PIPEPERF_H */
