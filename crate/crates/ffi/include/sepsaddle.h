#ifndef SEPSADDLE_H
#define SEPSADDLE_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SepVariant {
  SEP_VARIANT_ADASPDC = 0,
  SEP_VARIANT_SPDC = 1,
  SEP_VARIANT_PDCP = 2,
} SepVariant;

typedef enum SepStatus {
  SEP_STATUS_OK = 0,
  SEP_STATUS_NULL_POINTER = 1,
  SEP_STATUS_INVALID_ARGUMENT = 2,
  SEP_STATUS_DIMENSION_MISMATCH = 3,
  SEP_STATUS_PARSE = 4,
  SEP_STATUS_NON_FINITE = 5,
  SEP_STATUS_TOO_LARGE = 6,
  SEP_STATUS_NUMERICAL = 7,
  SEP_STATUS_IO = 8,
  SEP_STATUS_UTF8 = 9,
  SEP_STATUS_PANIC = 10,
} SepStatus;

typedef enum SepLoss {
  SEP_LOSS_RIDGE = 0,
  SEP_LOSS_SMOOTH_HINGE = 1,
  SEP_LOSS_LOGISTIC = 2,
} SepLoss;

typedef struct SepDataset SepDataset;

typedef struct SepTrace SepTrace;

typedef struct SepSolverConfig {
  enum SepVariant variant;
  size_t m;
  double max_passes;
  uint64_t seed;
  double trace_stride;
  size_t newton_iters;
  /**
   * 0 disables periodic recomputation.
   */
  uint64_t r_recompute_interval;
  bool record_time;
} SepSolverConfig;

/**
 * Unavailable values (no reference, first record's theta) are NaN.
 */
typedef struct SepTraceRecord {
  double pass;
  double objective;
  double suboptimality;
  double elapsed_ms;
  uint64_t seed;
  uint64_t iteration;
  double theta;
} SepTraceRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null after a
 * successful one. Owned by the library.
 */
const char *sep_last_error_message(void);

const char *sep_version(void);

struct SepSolverConfig sep_solver_config_default(enum SepVariant variant);

enum SepStatus sep_dataset_synthetic(size_t n, size_t d, uint64_t seed, struct SepDataset **out);

/**
 * `dim = 0` infers the feature dimension from the file.
 */
enum SepStatus sep_dataset_load_libsvm(const char *path, size_t dim, struct SepDataset **out);

enum SepStatus sep_dataset_add_bias(const struct SepDataset *dataset, struct SepDataset **out);

enum SepStatus sep_dataset_dims(const struct SepDataset *dataset, size_t *n, size_t *d);

void sep_dataset_free(struct SepDataset *dataset);

/**
 * Runs a solver from zero. `reference_objective` may be NaN for none. On a
 * run failure `out` still receives the records produced before it.
 */
enum SepStatus sep_run(const struct SepDataset *dataset,
                       enum SepLoss loss,
                       double lambda,
                       const struct SepSolverConfig *config,
                       double reference_objective,
                       struct SepTrace **out);

enum SepStatus sep_trace_len(const struct SepTrace *trace, size_t *len);

enum SepStatus sep_trace_get(const struct SepTrace *trace,
                             size_t index,
                             struct SepTraceRecord *out);

/**
 * Copies the final primal iterate into `buf` of length `len`, which must
 * equal the feature dimension. Empty for failed runs.
 */
enum SepStatus sep_trace_solution(const struct SepTrace *trace, double *buf, size_t len);

void sep_trace_free(struct SepTrace *trace);

/**
 * Closed-form ridge optimum. `x_buf` may be null when `x_len` is 0;
 * otherwise `x_len` must equal the feature dimension.
 */
enum SepStatus sep_ridge_reference(const struct SepDataset *dataset,
                                   double lambda,
                                   double *objective,
                                   double *x_buf,
                                   size_t x_len);

/**
 * Runs the numerical theory checks; `violations` receives the total count.
 */
enum SepStatus sep_verify(size_t trials, uint64_t seed, bool corrupt_theta, size_t *violations);

enum SepStatus sep_compute_sigma(double r,
                                 size_t n,
                                 size_t m,
                                 double lambda,
                                 double gamma,
                                 double *out);

enum SepStatus sep_compute_tau(double r_max,
                               size_t n,
                               size_t m,
                               double lambda,
                               double gamma,
                               double *out);

enum SepStatus sep_compute_theta(double r_max,
                                 size_t n,
                                 size_t m,
                                 double lambda,
                                 double gamma,
                                 double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEPSADDLE_H */
