#ifndef SEMISTABLE_H
#define SEMISTABLE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SsStatus {
  SS_STATUS_OK = 0,
  SS_STATUS_INVALID_PARAMETER = 1,
  SS_STATUS_DOMAIN = 2,
  SS_STATUS_NEGATIVE_COEFFICIENT = 3,
  SS_STATUS_MODULUS_EXCEEDS_ONE = 4,
  SS_STATUS_TAIL_TOLERANCE_UNMET = 5,
  SS_STATUS_BRANCH_TRACKING_FAILURE = 6,
  SS_STATUS_TAIL_TOO_HEAVY = 7,
  SS_STATUS_PARSE = 8,
  SS_STATUS_IO = 9,
  SS_STATUS_NULL_POINTER = 10,
  SS_STATUS_PANIC = 11,
} SsStatus;

/*
 A simulated `n_paths x (n_steps + 1)` matrix of AR(1) paths.
 */
typedef struct SsAr1Paths SsAr1Paths;

/*
 A generating-function expression.
 */
typedef struct SsExpr SsExpr;

/*
 Parameters `(alpha, A, b)` of a semi-stable law.
 */
typedef struct SsParams SsParams;

/*
 A truncated pmf table.
 */
typedef struct SsPmfTable SsPmfTable;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failing call on this thread, or null.
 */
const char *ss_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *ss_version(void);

/*
 # Safety
 `out` must be a valid pointer to writable storage for one handle.
 */
enum SsStatus ss_params_new(double alpha, double amplitude, double b, struct SsParams **out);

/*
 # Safety
 `p` must be null or a handle from [`ss_params_new`] not yet freed.
 */
void ss_params_free(struct SsParams *p);

/*
 Epoch `a = b^alpha`, or NaN for a null handle.

 # Safety
 `p` must be null or a live handle.
 */
double ss_params_epoch(const struct SsParams *p);

/*
 Largest amplitude for which the law is a genuine pmf, or NaN for a null handle.

 # Safety
 `p` must be null or a live handle.
 */
double ss_params_admissible_amplitude(const struct SsParams *p);

/*
 # Safety
 `p` must be a live handle and `out` writable.
 */
enum SsStatus ss_expr_semi_stable(const struct SsParams *p, struct SsExpr **out);

/*
 # Safety
 `out` must be writable.
 */
enum SsStatus ss_expr_poisson(double lambda, struct SsExpr **out);

/*
 `b ⊗ X`. The input handle stays owned by the caller.

 # Safety
 `e` must be a live handle and `out` writable.
 */
enum SsStatus ss_expr_thinned(const struct SsExpr *e, double b, struct SsExpr **out);

/*
 `P^t`.

 # Safety
 `e` must be a live handle and `out` writable.
 */
enum SsStatus ss_expr_power(const struct SsExpr *e, double t, struct SsExpr **out);

/*
 Law of the sum of independent variables.

 # Safety
 `lhs`, `rhs` must be live handles and `out` writable.
 */
enum SsStatus ss_expr_product(const struct SsExpr *lhs,
                              const struct SsExpr *rhs,
                              struct SsExpr **out);

/*
 # Safety
 `e` must be null or a live handle.
 */
void ss_expr_free(struct SsExpr *e);

/*
 `P(re + i im)`, written to `out_re` / `out_im`.

 # Safety
 `e` must be a live handle; `out_re`, `out_im` writable.
 */
enum SsStatus ss_expr_eval(const struct SsExpr *e,
                           double re,
                           double im,
                           double *out_re,
                           double *out_im);

/*
 Inverts `e` into a pmf table. `n_terms` is the initial length (0 for the
 default); `radius <= 0` selects the automatic radius.

 # Safety
 `e` must be a live handle and `out` writable.
 */
enum SsStatus ss_pmf_new(const struct SsExpr *e,
                         size_t n_terms,
                         double tail_tol,
                         double radius,
                         struct SsPmfTable **out);

/*
 # Safety
 `t` must be null or a live handle.
 */
size_t ss_pmf_len(const struct SsPmfTable *t);

/*
 `P(X = n)`; 0 beyond the table or for a null handle.

 # Safety
 `t` must be null or a live handle.
 */
double ss_pmf_get(const struct SsPmfTable *t, size_t n);

/*
 Pointer to the `ss_pmf_len` probabilities, valid while `t` lives.

 # Safety
 `t` must be null or a live handle.
 */
const double *ss_pmf_probs(const struct SsPmfTable *t);

/*
 Mass beyond the table, NaN for a null handle.

 # Safety
 `t` must be null or a live handle.
 */
double ss_pmf_tail_mass(const struct SsPmfTable *t);

/*
 # Safety
 `t` must be null or a live handle.
 */
void ss_pmf_free(struct SsPmfTable *t);

/*
 Simulates `n_paths` paths of `n_steps` steps; `zero_start != 0` starts
 from `X_0 = 0` instead of the stationary law.

 # Safety
 `p` must be a live handle and `out` writable.
 */
enum SsStatus ss_ar1_simulate(const struct SsParams *p,
                              size_t n_steps,
                              size_t n_paths,
                              uint64_t seed,
                              int32_t zero_start,
                              struct SsAr1Paths **out);

/*
 # Safety
 `a` must be null or a live handle.
 */
size_t ss_ar1_n_paths(const struct SsAr1Paths *a);

/*
 # Safety
 `a` must be null or a live handle.
 */
size_t ss_ar1_n_steps(const struct SsAr1Paths *a);

/*
 Row-major values, `n_paths * (n_steps + 1)` entries, valid while `a` lives.

 # Safety
 `a` must be null or a live handle.
 */
const uint64_t *ss_ar1_data(const struct SsAr1Paths *a);

/*
 # Safety
 `a` must be null or a live handle.
 */
void ss_ar1_free(struct SsAr1Paths *a);

/*
 Runs the verification suite and returns the JSON report in `out_json`
 (release with [`ss_string_free`]) and the overall flag in `out_overall`.
 Zero sizes select the defaults.

 # Safety
 `p` must be a live handle; `out_json` and `out_overall` writable.
 */
enum SsStatus ss_verify_json(const struct SsParams *p,
                             uint64_t seed,
                             size_t n_draws,
                             size_t n_paths,
                             size_t calibration_reps,
                             int32_t negative_controls,
                             char **out_json,
                             int32_t *out_overall);

/*
 # Safety
 `s` must be null or a string returned by this library, not yet freed.
 */
void ss_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEMISTABLE_H */
