#ifndef TOURNEY_EXTREMES_H
#define TOURNEY_EXTREMES_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result codes. The first four agree with the command-line exit codes.
 */
typedef enum TeStatus {
  TE_OK = 0,
  TE_VERIFICATION_FAILED = 1,
  TE_CONFIG_ERROR = 2,
  TE_CAPACITY_ERROR = 3,
  TE_DOMAIN_ERROR = 4,
  TE_INVALID_MODEL = 5,
  TE_NULL_POINTER = 6,
  TE_PANIC = 7,
} TeStatus;

/*
 Opaque outcome model.
 */
typedef struct TeModel TeModel;

/*
 Opaque simulation report.
 */
typedef struct TeSimReport TeSimReport;

/*
 Exact exceedance quantities at one `(n, t)`.
 */
typedef struct TeExceedance {
  uint64_t n;
  double t;
  double x_n;
  double raw_threshold;
  double p_n;
  double lambda_n;
  double pair_cov;
  double var_w;
  double stein_bound;
  double mean_mismatch_bound;
  double combined_bound;
  bool threshold_near_atom;
} TeExceedance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *te_version(void);

/*
 Copies the calling thread's last error message into `buf` (truncated,
 always NUL-terminated when `len > 0`) and returns its full length in
 bytes, excluding the terminator.

 # Safety
 `buf` must be null or point to `len` writable bytes.
 */
size_t te_last_error_message(char *buf, size_t len);

struct TeModel *te_model_classical(void);

struct TeModel *te_model_chess(void);

/*
 Builds a model on the lattice `{0, 1/denominator, ..., 1}` from `len`
 pairs `(masses[i], probs[i])`.

 # Safety
 `masses` and `probs` must point to `len` readable elements; `out` must be
 writable.
 */
enum TeStatus te_model_new(uint32_t denominator,
                           const uint32_t *masses,
                           const double *probs,
                           size_t len,
                           struct TeModel **out);

/*
 # Safety
 `model` must be null or a handle from this library not yet freed.
 */
void te_model_free(struct TeModel *model);

/*
 Per-match standard deviation of the model.

 # Safety
 `model` must be a live handle; `out` must be writable.
 */
enum TeStatus te_model_sigma(const struct TeModel *model, double *out);

/*
 # Safety
 `a_n` and `b_n` must be writable.
 */
enum TeStatus te_norming(uint64_t n, double *a_n, double *b_n);

/*
 Limit of `P(M_{n,j} <= t)`.
 */
double te_order_stat_limit_cdf(double t, uint32_t j);

/*
 Exact exceedance quantities by lattice convolution.

 # Safety
 `model` must be a live handle; `out` must be writable.
 */
enum TeStatus te_exceedance(const struct TeModel *model,
                            uint64_t n,
                            double t,
                            struct TeExceedance *out);

/*
 Runs a simulation over the `t_len` Gumbel coordinates in `t_grid`,
 retaining order statistics `0..=j_max`. Results do not depend on
 `workers`; pass 0 to use every available core.

 # Safety
 `model` must be a live handle, `t_grid` must point to `t_len` readable
 values and `out` must be writable.
 */
enum TeStatus te_simulate(const struct TeModel *model,
                          uint64_t n,
                          const double *t_grid,
                          size_t t_len,
                          uint32_t j_max,
                          uint64_t replicates,
                          uint64_t seed,
                          size_t workers,
                          struct TeSimReport **out);

/*
 # Safety
 `report` must be null or a live handle.
 */
void te_sim_report_free(struct TeSimReport *report);

/*
 Copies the exceedance-count histogram for grid point `t_index` into
 `counts` (at most `len` entries) and writes the number of bins to
 `bins` and the overflow count to `overflow`.

 # Safety
 `report` must be a live handle; `counts` must be null or hold `len`
 writable values; `bins` and `overflow` must be writable.
 */
enum TeStatus te_sim_exceedance_histogram(const struct TeSimReport *report,
                                          size_t t_index,
                                          uint64_t *counts,
                                          size_t len,
                                          size_t *bins,
                                          uint64_t *overflow);

/*
 Empirical total variation distance of the exceedance count at grid point
 `t_index` from its Poisson limit.

 # Safety
 `report` must be a live handle; `out` must be writable.
 */
enum TeStatus te_sim_tv_limit(const struct TeSimReport *report, size_t t_index, double *out);

/*
 Empirical `P(M_{n,j} <= t)`.

 # Safety
 `report` must be a live handle; `out` must be writable.
 */
enum TeStatus te_sim_order_stat_cdf(const struct TeSimReport *report,
                                    uint32_t j,
                                    double t,
                                    double *out);

/*
 Runs the oracle verification suite with the given enumeration budget.
 Returns `TE_VERIFICATION_FAILED` when any check fails; `failed` receives
 the number of failing checks.

 # Safety
 `failed` must be null or writable.
 */
enum TeStatus te_verify(uint64_t budget, size_t *failed);

/*
 Reads a NUL-terminated model file path or builtin name (`classical`,
 `chess`).

 # Safety
 `spec` must be a valid NUL-terminated string; `out` must be writable.
 */
enum TeStatus te_model_load(const char *spec, struct TeModel **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TOURNEY_EXTREMES_H */
