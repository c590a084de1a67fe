#pragma once

#include <stdexcept>
#include <vector>

#include "copoprice/model.hpp"
#include "copoprice/optkit.hpp"

namespace copoprice {

// A primal solution of the welfare MILP in standard form: binary
// assignment, power schedule, the four slack blocks, and the objective.
struct Assignment {
  Matrix x;     // I x J, entries in {0,1}
  Matrix p;     // J x T
  Matrix phi;   // I x J
  Matrix psi;   // J x T
  Matrix zeta;  // J x T
  std::vector<double> xi;  // I
  double objective = 0.0;

  // EVSE serving user i (0-based), or -1 if unserved.
  int assigned_evse(int i) const;
};

struct BnbOptions {
  long node_limit = 500000;
  double int_tol = 1e-6;
  double gap_tol = 1e-9;
};

struct NodeLimitError : std::runtime_error {
  double incumbent;
  double bound;
  NodeLimitError(double inc, double bnd)
      : std::runtime_error("solve_milp: node limit exhausted"),
        incumbent(inc),
        bound(bnd) {}
};

struct PowerResult {
  bool feasible = false;
  Matrix p;             // J x T when feasible
  int bad_j = -1, bad_t = -1;  // violating pair when occupancy fails
};

// Cost-minimal power schedule for a fixed assignment: each assigned pair
// fills e_i over its window in ascending price order (ties to the earlier
// slot), capped at G_j(t). Infeasible when x violates occupancy or
// uniqueness, or when the window capacity cannot cover e_i.
PowerResult schedule_power(const Instance& inst, const Matrix& x);

// sum_ij v_i x_ij - sum_t pi(t) sum_j p_j(t)
double welfare(const Instance& inst, const Matrix& x, const Matrix& p);

// Builds the slack blocks of an Assignment from (x, p).
Assignment make_assignment(const Instance& inst, const Matrix& x, const Matrix& p);

// Relabels interchangeable EVSEs (identical capacity vectors) so the
// vectorized x is lexicographically smallest. Welfare unchanged.
Assignment canonicalize(const Instance& inst, const Assignment& a);

// Best-first branch and bound on the LP relaxation, branching on the most
// fractional x_ij. Globally optimal; ties resolved toward the canonical
// form. Throws NodeLimitError past opts.node_limit.
Assignment solve_milp(const Instance& inst, const BnbOptions& opts = {});

// (J+1)^I enumeration. Oracle-grade reference for small instances.
Assignment solve_exhaustive(const Instance& inst);

}  // namespace copoprice
