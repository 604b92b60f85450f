#include <math.h>
#include <stdio.h>
#include <string.h>

#include "idsopt.h"

#define CHECK(expr)                                                              \
  do {                                                                           \
    IdsStatus st_ = (expr);                                                      \
    if (st_ != IDS_STATUS_OK) {                                                  \
      char msg_[256];                                                            \
      ids_last_error(msg_, sizeof msg_);                                         \
      fprintf(stderr, "%s:%d: status %d: %s\n", __FILE__, __LINE__, st_, msg_); \
      return 1;                                                                  \
    }                                                                            \
  } while (0)

int main(void) {
  IdsProblem *lp = NULL;
  CHECK(ids_problem_random_lp(30, 15, 0.3, 4, &lp));
  size_t n = 0, m = 0;
  CHECK(ids_problem_dims(lp, &n, &m));
  if (n != 30 || m != 15) return 2;

  double z0[45], z[45];
  CHECK(ids_problem_start(lp, z0, n + m));
  IdsSolver *solver = NULL;
  CHECK(ids_solver_new(lp, IDS_ALGORITHM_PDHG, 0.0, z0, n + m, &solver));

  double first = 0.0, last = 0.0;
  size_t agd = 0;
  CHECK(ids_solver_ids(solver, &first, &agd));
  CHECK(ids_solver_run(solver, 500));
  CHECK(ids_solver_ids(solver, &last, &agd));
  CHECK(ids_solver_iterate(solver, z, n + m));
  if (!(last < first) || !isfinite(last)) return 3;

  if (ids_solver_iterate(solver, z, 3) != IDS_STATUS_DIMENSION_MISMATCH) return 4;
  char msg[8];
  size_t need = ids_last_error(msg, sizeof msg);
  if (need <= sizeof msg || strlen(msg) != sizeof msg - 1) return 5;

  IdsSolver *bad = NULL;
  if (ids_solver_new(lp, IDS_ALGORITHM_PDHG, 100.0, z0, n + m, &bad) != IDS_STATUS_STEP_SIZE) return 6;
  if (bad != NULL) return 7;

  IdsProblem *missing = NULL;
  if (ids_problem_load("/nonexistent/problem.txt", &missing) != IDS_STATUS_IO) return 8;

  printf("idsopt %s: ids %.3e -> %.3e\n", ids_version(), first, last);
  ids_solver_free(solver);
  ids_problem_free(lp);
  return 0;
}
