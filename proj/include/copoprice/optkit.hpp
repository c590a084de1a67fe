#pragma once

#include <optional>
#include <vector>

#include "copoprice/model.hpp"

namespace copoprice {

// Minimal dense row-major matrix.
struct Matrix {
  int rows = 0, cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

  double& operator()(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }

  static Matrix identity(int n);
  double max_abs() const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, Stalled };

// min c'u  s.t.  A u = b,  u >= lower (default 0),  u <= upper where set.
struct DenseLp {
  Matrix A;
  std::vector<double> b;
  std::vector<double> c;
  std::vector<double> lower;                  // empty means all-zero
  std::vector<std::optional<double>> upper;   // empty means none
};

struct LpSolution {
  LpStatus status = LpStatus::Stalled;
  std::vector<double> u;  // primal values
  std::vector<double> y;  // duals of the equality rows of A
  double objective = 0.0;
};

// Two-phase primal simplex, dense tableau, Bland's rule. Duals come from
// the final basis and satisfy y'b = c'u at optimality.
LpSolution solve_lp(const DenseLp& lp, double tol = 1e-9);

struct EigResult {
  std::vector<double> w;  // ascending
  Matrix V;               // orthonormal, columns are eigenvectors
};

// Cyclic Jacobi. Throws std::invalid_argument if M is not symmetric
// within sym_tol (relative).
EigResult sym_eig(const Matrix& M, double sym_tol = 1e-9);

// Euclidean projection onto the PSD cone: V max(w,0) V'.
Matrix project_psd(const Matrix& M);

struct LpRelaxation {
  LpStatus status = LpStatus::Stalled;
  Matrix x;             // I x J fractional assignment
  Matrix p;             // J x T
  Matrix mu_occupancy;  // J x T occupancy duals, >= 0
  Matrix mu_capacity;   // J x T capacity duals, >= 0
  double objective = 0.0;
};

// Relaxes the binary assignment variables to [0,1] and maximizes welfare.
// Dual sign convention: mu >= 0 and a larger right-hand side weakly
// increases the optimum.
LpRelaxation solve_lp_relaxation(const Instance& inst);

}  // namespace copoprice
