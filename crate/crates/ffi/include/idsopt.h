#ifndef IDSOPT_H
#define IDSOPT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum IdsStatus {
  IDS_STATUS_OK = 0,
  IDS_STATUS_NULL_POINTER = 1,
  IDS_STATUS_INVALID_ARGUMENT = 2,
  IDS_STATUS_DIMENSION_MISMATCH = 3,
  IDS_STATUS_STEP_SIZE = 4,
  IDS_STATUS_NUMERICAL = 5,
  IDS_STATUS_IO = 6,
  IDS_STATUS_PARSE = 7,
  IDS_STATUS_UNSUPPORTED = 8,
  IDS_STATUS_PANIC = 9,
} IdsStatus;

typedef enum IdsAlgorithm {
  IDS_ALGORITHM_PDHG = 0,
  IDS_ALGORITHM_PPM = 1,
  IDS_ALGORITHM_LADMM = 2,
  IDS_ALGORITHM_ADMM = 3,
} IdsAlgorithm;

/**
 * A saddle problem and an optional starting point.
 */
typedef struct IdsProblem IdsProblem;

/**
 * A solver bound to a copy of a problem, holding the current iterate.
 */
typedef struct IdsSolver IdsSolver;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL terminated,
 * truncated to `cap`). Returns the full message length plus one.
 *
 * # Safety
 * `buf` must be null or point to `cap` writable bytes.
 */
size_t ids_last_error(char *buf, size_t cap);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ids_version(void);

/**
 * Reads a problem file: MPS when the name ends in `.mps`, the native format otherwise.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum IdsStatus ids_problem_load(const char *path, struct IdsProblem **out);

/**
 * Random LP with a planted optimum and its generator start point.
 *
 * # Safety
 * `out` must be a writable pointer.
 */
enum IdsStatus ids_problem_random_lp(size_t n,
                                     size_t m,
                                     double density,
                                     uint64_t seed,
                                     struct IdsProblem **out);

/**
 * `min_x max_y cᵀx + yᵀAx − bᵀy` for a dense row-major `m × n` matrix `a`.
 * `c` and `b` may be null for zero vectors. Fails when no saddle point exists.
 *
 * # Safety
 * `a` must hold `m·n` values, `c` (if not null) `n` and `b` (if not null) `m`.
 */
enum IdsStatus ids_problem_bilinear(size_t m,
                                    size_t n,
                                    const double *a,
                                    const double *c,
                                    const double *b,
                                    struct IdsProblem **out);

/**
 * Primal and dual dimensions.
 *
 * # Safety
 * `problem` must be a live handle; `n` and `m` writable pointers.
 */
enum IdsStatus ids_problem_dims(const struct IdsProblem *problem, size_t *n, size_t *m);

/**
 * Copies the known saddle point into `buf` of length `n + m`.
 * `IDS_STATUS_UNSUPPORTED` when none is attached.
 *
 * # Safety
 * `problem` must be a live handle and `buf` hold `len` writable values.
 */
enum IdsStatus ids_problem_z_star(const struct IdsProblem *problem, double *buf, size_t len);

/**
 * Copies the stored start point into `buf` of length `n + m`.
 * `IDS_STATUS_UNSUPPORTED` when none is stored.
 *
 * # Safety
 * `problem` must be a live handle and `buf` hold `len` writable values.
 */
enum IdsStatus ids_problem_start(const struct IdsProblem *problem, double *buf, size_t len);

/**
 * # Safety
 * `problem` must be null or a handle not yet freed.
 */
void ids_problem_free(struct IdsProblem *problem);

/**
 * Binds `algorithm` to a copy of `problem`, starting at `z0` (length `n + m`).
 * A `step_size` that is not positive selects the default step.
 *
 * # Safety
 * `problem` must be a live handle, `z0` hold `len` values and `out` be writable.
 */
enum IdsStatus ids_solver_new(const struct IdsProblem *problem,
                              enum IdsAlgorithm algorithm,
                              double step_size,
                              const double *z0,
                              size_t len,
                              struct IdsSolver **out);

/**
 * Advances `iters` iterations. On failure the iterate is left at the last
 * successful step.
 *
 * # Safety
 * `solver` must be a live handle.
 */
enum IdsStatus ids_solver_run(struct IdsSolver *solver, size_t iters);

/**
 * Copies the current iterate into `buf` of length `n + m`.
 *
 * # Safety
 * `solver` must be a live handle and `buf` hold `len` writable values.
 */
enum IdsStatus ids_solver_iterate(const struct IdsSolver *solver, double *buf, size_t len);

/**
 * Iterations taken so far.
 *
 * # Safety
 * `solver` must be a live handle and `k` writable.
 */
enum IdsStatus ids_solver_iteration(const struct IdsSolver *solver, size_t *k);

/**
 * IDS of the current iterate in the solver's metric, with the AGD iteration
 * count (null to skip). Under ADMM the value is range-restricted and needs
 * at least one step.
 *
 * # Safety
 * `solver` must be a live handle, `value` writable, `agd_iters` null or writable.
 */
enum IdsStatus ids_solver_ids(const struct IdsSolver *solver, double *value, size_t *agd_iters);

/**
 * # Safety
 * `solver` must be null or a handle not yet freed.
 */
void ids_solver_free(struct IdsSolver *solver);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IDSOPT_H */
