#ifndef SENSORSHIFT_H
#define SENSORSHIFT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum SsStatus {
  SS_STATUS_OK = 0,
  SS_STATUS_NULL_POINTER = 1,
  /**
   * Malformed or mismatched input.
   */
  SS_STATUS_INVALID_INPUT = 2,
  /**
   * No solution, a failed linear program, or an undefined quantity such
   * as an infinite divergence.
   */
  SS_STATUS_INFEASIBLE = 3,
  /**
   * An ill-conditioned matrix or similar numerical failure.
   */
  SS_STATUS_NUMERICAL = 4,
  /**
   * The output buffer is shorter than required.
   */
  SS_STATUS_BUFFER_TOO_SMALL = 5,
  /**
   * A Rust panic was caught at the boundary.
   */
  SS_STATUS_PANIC = 6,
} SsStatus;

/**
 * Linear-Gaussian model `(F, Σ_NN, D, E, Σ_OO)`.
 */
typedef struct SsLinearModel SsLinearModel;

/**
 * Solution polytope of an identification system.
 */
typedef struct SsPolytope SsPolytope;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next call into this library from the same thread.
 */
const char *ss_last_error_message(void);

/**
 * Static, nul-terminated name of a status code.
 */
const char *ss_status_name(enum SsStatus status);

/**
 * Enumerates the solution set of `sensor · v = rhs`, `v ≥ 0`, for a
 * `rows × cols` column-stochastic `sensor`.
 *
 * # Safety
 * `sensor` must point to `rows * cols` doubles, `rhs` to `rows` doubles and
 * `out` to writable storage for one pointer.
 */
enum SsStatus ss_identify(const double *sensor,
                          size_t rows,
                          size_t cols,
                          const double *rhs,
                          struct SsPolytope **out);

/**
 * # Safety
 * `p` must be null or a handle from [`ss_identify`] not yet freed.
 */
void ss_polytope_free(struct SsPolytope *p);

/**
 * Length of each vertex, or 0 for a null handle.
 *
 * # Safety
 * `p` must be null or a live handle.
 */
size_t ss_polytope_dimension(const struct SsPolytope *p);

/**
 * Number of vertices, or 0 for a null handle.
 *
 * # Safety
 * `p` must be null or a live handle.
 */
size_t ss_polytope_vertex_count(const struct SsPolytope *p);

/**
 * Copies the vertices, one per row, into `out` (`len` doubles available).
 *
 * # Safety
 * `p` must be a live handle and `out` must point to `len` writable doubles.
 */
enum SsStatus ss_polytope_vertices(const struct SsPolytope *p, double *out, size_t len);

/**
 * Whether `point` lies in the convex hull of the vertices within `tol`.
 *
 * # Safety
 * `p` must be a live handle, `point` must point to `len` doubles and
 * `inside` to one writable bool.
 */
enum SsStatus ss_polytope_contains(const struct SsPolytope *p,
                                   const double *point,
                                   size_t len,
                                   double tol,
                                   bool *inside);

/**
 * Builds a model with `dx`-dimensional state and observation, `da`
 * actions and `dz` outcomes: `f` and `sigma_nn` are `dx × dx`, `d` is
 * `dz × da`, `e` is `dz × dx` and `sigma_oo` is `dz × dz`.
 *
 * # Safety
 * Each matrix pointer must reference the stated number of doubles and `out`
 * must be writable.
 */
enum SsStatus ss_linear_model_new(size_t dx,
                                  size_t da,
                                  size_t dz,
                                  const double *f,
                                  const double *sigma_nn,
                                  const double *d,
                                  const double *e,
                                  const double *sigma_oo,
                                  struct SsLinearModel **out);

/**
 * # Safety
 * `m` must be null or a handle from [`ss_linear_model_new`] not yet freed.
 */
void ss_linear_model_free(struct SsLinearModel *m);

/**
 * Recovers `(D, E)` from the population covariances the model induces
 * under `policy_cov`, the `(da + dx)²` covariance of `(A, X)` with the
 * action first. `d_out` receives `dz × da` and `e_out` `dz × dx` doubles.
 *
 * # Safety
 * `m` must be a live handle; `policy_cov`, `d_out` and `e_out` must
 * reference the stated number of doubles.
 */
enum SsStatus ss_linear_recover_effect(const struct SsLinearModel *m,
                                       const double *policy_cov,
                                       double lambda,
                                       double *d_out,
                                       double *e_out);

/**
 * `D(p ‖ q)` in nats for two aligned probability vectors.
 *
 * # Safety
 * `p` and `q` must point to `len` doubles and `out` to one writable double.
 */
enum SsStatus ss_kl_divergence(const double *p, const double *q, size_t len, double *out);

/**
 * Runs the randomized bound audits and reports the number of rows and of
 * violated rows.
 *
 * # Safety
 * `rows` and `violations` must each be null or writable.
 */
enum SsStatus ss_audit_bounds(size_t n_models, uint64_t seed, size_t *rows, size_t *violations);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SENSORSHIFT_H */
