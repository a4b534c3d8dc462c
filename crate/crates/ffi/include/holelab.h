#ifndef HOLELAB_H
#define HOLELAB_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum HolelabStatus {
  HOLELAB_STATUS_OK = 0,
  HOLELAB_STATUS_NULL_POINTER = 1,
  HOLELAB_STATUS_INVALID_INPUT = 2,
  HOLELAB_STATUS_INVALID_SHAPE = 3,
  HOLELAB_STATUS_CONTAINMENT = 4,
  HOLELAB_STATUS_SINGULARITY = 5,
  HOLELAB_STATUS_ILL_CONDITIONED = 6,
  HOLELAB_STATUS_RESIDUAL = 7,
  HOLELAB_STATUS_NEAR_BOUNDARY = 8,
  HOLELAB_STATUS_OUTSIDE_DOMAIN = 9,
  HOLELAB_STATUS_NUMERICAL = 10,
  HOLELAB_STATUS_BUFFER_TOO_SMALL = 11,
  HOLELAB_STATUS_PANIC = 12,
} HolelabStatus;

/**
 * Rectangular period lattice `q Z^2`.
 */
typedef struct HolelabLattice HolelabLattice;

/**
 * Lattice, hole, data and discretization for one value of eps.
 */
typedef struct HolelabProblem HolelabProblem;

/**
 * Boundary density together with a field evaluator.
 */
typedef struct HolelabSolution HolelabSolution;

/**
 * One Fourier mode `c_k exp(2 pi i k~ . x)` of the forcing term.
 */
typedef struct HolelabMode {
  int64_t k1;
  int64_t k2;
  double re;
  double im;
} HolelabMode;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL terminated,
 * truncated to `len` bytes). Returns the full message length excluding the
 * terminator, or 0 when there is no message.
 *
 * # Safety
 * `buf` must be NULL or point to `len` writable bytes.
 */
size_t holelab_last_error(char *buf, size_t len);

/**
 * Static description of a status code; unknown codes give "unknown status".
 */
const char *holelab_status_str(int status);

/**
 * Creates the lattice with periods `q11`, `q22`.
 *
 * # Safety
 * `out_lattice` must be a valid pointer to a handle slot.
 */
enum HolelabStatus holelab_lattice_new(double q11, double q22, struct HolelabLattice **out_lattice);

/**
 * # Safety
 * `lattice` must be NULL or a handle from [`holelab_lattice_new`], not yet freed.
 */
void holelab_lattice_free(struct HolelabLattice *lattice);

/**
 * Periodic Green function `S_q` at `(x1, x2)`; the gradient is written to
 * `gradient[0..2]` unless `gradient` is NULL.
 *
 * # Safety
 * `lattice` must be a live handle, `value` writable, `gradient` NULL or two writable doubles.
 */
enum HolelabStatus holelab_lattice_green(const struct HolelabLattice *lattice,
                                         double x1,
                                         double x2,
                                         double *value,
                                         double *gradient);

/**
 * Regular part `R_q = S_q - S_2`, finite at the lattice points.
 *
 * # Safety
 * As for [`holelab_lattice_green`].
 */
enum HolelabStatus holelab_lattice_remainder(const struct HolelabLattice *lattice,
                                             double x1,
                                             double x2,
                                             double *value,
                                             double *gradient);

/**
 * Builds a problem. `shape` holds `[a0, b0, a1, b1, c1, d1, ...]` with
 * `phi(t) = (a0, b0) + sum_k (a_k cos kt + b_k sin kt, c_k cos kt + d_k sin kt)`;
 * `g` holds `[a0, a1, b1, ...]`; `modes` lists the forcing coefficients
 * (conjugate partners are added).
 *
 * # Safety
 * Array pointers must be valid for their lengths; `lattice` must be a live handle.
 */
enum HolelabStatus holelab_problem_new(const struct HolelabLattice *lattice,
                                       double p1,
                                       double p2,
                                       double eps,
                                       const double *shape,
                                       size_t shape_len,
                                       const double *g,
                                       size_t g_len,
                                       const struct HolelabMode *modes,
                                       size_t modes_len,
                                       size_t n,
                                       struct HolelabProblem **out_problem);

/**
 * Copy of `problem` at another eps.
 *
 * # Safety
 * `problem` must be a live handle and `out_problem` writable.
 */
enum HolelabStatus holelab_problem_with_eps(const struct HolelabProblem *problem,
                                            double eps,
                                            struct HolelabProblem **out_problem);

/**
 * # Safety
 * `problem` must be NULL or a live handle.
 */
void holelab_problem_free(struct HolelabProblem *problem);

/**
 * Solves the boundary system. At `eps = 0` the limiting system is solved.
 *
 * # Safety
 * `problem` must be a live handle and `out_solution` writable.
 */
enum HolelabStatus holelab_solve(const struct HolelabProblem *problem,
                                 struct HolelabSolution **out_solution);

/**
 * # Safety
 * `solution` must be NULL or a live handle.
 */
void holelab_solution_free(struct HolelabSolution *solution);

/**
 * Number of boundary nodes of the solution.
 *
 * # Safety
 * `solution` must be a live handle.
 */
size_t holelab_solution_len(const struct HolelabSolution *solution);

/**
 * Density at the nodes `t_j = 2 pi j / N`, the additive constant and the
 * condition estimate. `constant` and `condition` may be NULL.
 *
 * # Safety
 * `theta` must hold `len` writable doubles.
 */
enum HolelabStatus holelab_solution_density(const struct HolelabSolution *solution,
                                            double *theta,
                                            size_t len,
                                            double *constant,
                                            double *condition);

/**
 * Evaluates the solution at `(x1, x2)`. `ufrak` receives the analytic part;
 * `u` (may be NULL) receives the full solution, which requires `eps > 0`.
 *
 * # Safety
 * `solution` must be a live handle, `ufrak` writable.
 */
enum HolelabStatus holelab_solution_eval(const struct HolelabSolution *solution,
                                         double x1,
                                         double x2,
                                         double *ufrak,
                                         double *u);

/**
 * Limiting constant computed through the adjoint density.
 *
 * # Safety
 * `problem` must be a live handle and `value` writable.
 */
enum HolelabStatus holelab_limit_constant(const struct HolelabProblem *problem, double *value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HOLELAB_H */
