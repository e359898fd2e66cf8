#ifndef FRACVAR_H
#define FRACVAR_H

/* Generated from src/lib.rs by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FvStatus {
  FV_STATUS_OK = 0,
  FV_STATUS_NULL_POINTER = 1,
  FV_STATUS_INVALID_ARGUMENT = 2,
  FV_STATUS_PARSE_ERROR = 3,
  /**
   * The Lagrangian or a special function could not be evaluated.
   */
  FV_STATUS_DOMAIN_ERROR = 4,
  FV_STATUS_NO_CONVERGENCE = 5,
  /**
   * The caller's buffer length does not match what the call produces.
   */
  FV_STATUS_LENGTH_MISMATCH = 6,
  FV_STATUS_PANIC = 7,
} FvStatus;

/**
 * A variational problem: grid, orders, Lagrangian and boundary values.
 */
typedef struct FvProblem FvProblem;

/**
 * The extremals found by [`fv_solve`], sorted by functional value.
 */
typedef struct FvReport FvReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or "" if none.
 * The string stays valid until the next failing call on this thread.
 */
const char *fv_last_error(void);

/**
 * Creates a problem on the grid `a, a + h, ..., a + k h`.
 *
 * `left_bc` and `right_bc` point at the pinned boundary values; pass null
 * to leave that endpoint free.
 *
 * # Safety
 * `lagrangian` must be a NUL-terminated string. `left_bc` and `right_bc`
 * must be null or point at a double. `out` must be a valid pointer.
 */
enum FvStatus fv_problem_new(double a,
                             double h,
                             size_t k,
                             double alpha,
                             double beta,
                             const char *lagrangian,
                             const double *left_bc,
                             const double *right_bc,
                             struct FvProblem **out);

/**
 * # Safety
 * `p` must be null or a handle from [`fv_problem_new`] not yet freed.
 */
void fv_problem_free(struct FvProblem *p);

/**
 * Number of grid points, `k + 1`. Zero for a null handle.
 *
 * # Safety
 * `p` must be null or a live handle.
 */
size_t fv_problem_point_count(const struct FvProblem *p);

/**
 * Value of the functional at the trajectory `y[0..len]` (`len = k + 1`).
 *
 * # Safety
 * `y` must point at `len` doubles and `out` at one double.
 */
enum FvStatus fv_evaluate_functional(const struct FvProblem *p,
                                     const double *y,
                                     size_t len,
                                     double *out);

/**
 * Euler–Lagrange residual at the `k - 1` interior points.
 *
 * # Safety
 * `y` must point at `len` doubles and `out` at `out_len` doubles.
 */
enum FvStatus fv_euler_lagrange_residual(const struct FvProblem *p,
                                         const double *y,
                                         size_t len,
                                         double *out,
                                         size_t out_len);

/**
 * Left-hand side of the Legendre condition at the `k - 1` interior points.
 *
 * # Safety
 * `y` must point at `len` doubles and `out` at `out_len` doubles.
 */
enum FvStatus fv_legendre_lhs(const struct FvProblem *p,
                              const double *y,
                              size_t len,
                              double *out,
                              size_t out_len);

/**
 * Multi-start search for every extremal. `n_starts = 0` uses the default.
 *
 * # Safety
 * `p` must be a live handle and `out` a valid pointer.
 */
enum FvStatus fv_solve(const struct FvProblem *p,
                       size_t n_starts,
                       uint64_t seed,
                       struct FvReport **out);

/**
 * Number of candidates in the report. Zero for a null handle.
 *
 * # Safety
 * `r` must be null or a live handle.
 */
size_t fv_report_len(const struct FvReport *r);

/**
 * Copies candidate `index`: its full trajectory (`len = k + 1`), its
 * functional value and whether it satisfies the Legendre condition.
 * `functional` and `legendre_verified` may be null.
 *
 * # Safety
 * `r` must be a live handle and `values` must point at `len` doubles.
 */
enum FvStatus fv_report_candidate(const struct FvReport *r,
                                  size_t index,
                                  double *values,
                                  size_t len,
                                  double *functional,
                                  bool *legendre_verified);

/**
 * # Safety
 * `r` must be null or a handle from [`fv_solve`] not yet freed.
 */
void fv_report_free(struct FvReport *r);

/**
 * `Γ(x)`. Fails at the poles `x = 0, -1, -2, ...`.
 *
 * # Safety
 * `out` must point at a double.
 */
enum FvStatus fv_gamma(double x, double *out);

/**
 * The h-factorial `t_h^{(alpha)} = h^alpha Γ(t/h + 1) / Γ(t/h + 1 - alpha)`.
 *
 * # Safety
 * `out` must point at a double.
 */
enum FvStatus fv_h_factorial(double t, double alpha, double h, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRACVAR_H */
