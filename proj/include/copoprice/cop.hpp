#pragma once

#include <vector>

#include "copoprice/lift.hpp"
#include "copoprice/optkit.hpp"

namespace copoprice {

struct CopositivityVerdict {
  enum class Kind { Certified, Violator, Inconclusive } kind = Kind::Inconclusive;
  std::vector<double> v;  // violator, v >= 0 and ||v||_1 = 1
  double value = 0.0;     // v'Mv for a violator; best candidate value otherwise
  int depth = 0;          // deepest certified cell
  long cells = 0;         // subsimplices processed
};

// Nonnegative vectors v_k, each inducing the valid inequality
// v' Omega(theta) v >= 0 in multiplier space. No duplicates within 1e-9.
struct CutPool {
  std::vector<std::vector<double>> cuts;
  bool add(const std::vector<double>& v);  // false if duplicate
};

struct CopOptions {
  double cop_tol = 1e-7;   // scaled by max(1, ||M||_max)
  long budget = 200000;    // subsimplex budget for the partition stage
  int dykstra_iters = 250;
  int max_iters = 2000;    // cutting-plane iterations
  double gap_tol = 1e-4;
  double lp_tol = 1e-9;
};

// Staged test: (1) negative diagonal, (2) PSD-plus-nonnegative
// decomposition via alternating projections, (3) simplicial partition of
// the standard simplex with vertex and edge bound tests, recursing on the
// longest violating edge. Violator search heuristics (pair scan,
// eigenvector split, replicator dynamics) run before the expensive
// stages; all are deterministic. Throws on non-symmetric input.
CopositivityVerdict check_copositive(const Matrix& M, double tol = 1e-7,
                                     long budget = 200000);

struct CopSolveResult {
  DualSolution duals;
  Matrix omega;
  int iterations = 0;
  CopositivityVerdict verdict;
  double gap = 0.0;  // |objective - milp_obj| / max(1, |milp_obj|)
  bool converged = false;
  double feas_residual = 0.0;  // splitting solver: max |Omega(theta) - P - M|
  CutPool pool;
};

// Cutting-plane solve of the conic dual. The master LP minimizes the dual
// objective subject to the complementary-slackness equality Tr(Y* Omega) = 0,
// nonnegativity of the occupancy/capacity/uniqueness multipliers, and all
// pool cuts; each round the checker either certifies Omega or produces a
// violator that becomes a new cut. z_star must be an optimal point of the
// model cd was built from.
CopSolveResult solve_cop_cutting_plane(const CopData& cd, const Instance& inst,
                                       const std::vector<double>& z_star,
                                       double milp_obj, const CopOptions& opts = {});

// Same loop on the reduced lifting with the power schedule frozen at a.p.
CopSolveResult solve_cop_reduced(const Instance& inst, const Assignment& a,
                                 const CopOptions& opts = {});

}  // namespace copoprice
