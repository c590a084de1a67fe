#pragma once

#include <array>
#include <vector>

#include "copoprice/milp.hpp"
#include "copoprice/model.hpp"
#include "copoprice/optkit.hpp"

namespace copoprice {

// Data of the conic lifting. The bordered (N+1)-dimensional matrices are
// generated on demand from the constraint vectors:
//   H(h)  = [[0, h'/2], [h/2, 0]]          trace picks out  h'z
//   Ht(h) = [[0, 0], [0, h h']]            trace picks out  h'Z h
//   B_ij  = consistency pattern for x_ij = Z_{x,x}
// plus the objective border Qt built from q (minimization orientation).
struct CopData {
  int N = 0;  // stacked variable count
  int n = 0;  // N + 1
  int I = 0, J = 0, T = 0;
  bool reduced = false;
  double frozen_cost = 0.0;  // energy cost constant folded out of a reduced model

  std::vector<double> q;  // length N: [-v block, pi block, 0...] (full model)
  // Families in order: energy, occupancy, capacity, uniqueness.
  // The capacity family is empty in a reduced model.
  std::array<std::vector<Constraint>, 4> fam;
  std::vector<int> x_pos;  // position of each x_ij in z, i-major

  int family_size(int f) const { return static_cast<int>(fam[f].size()); }
  // Multiplier layout: [lam1..lam4, Lam1..Lam4, delta].
  int num_multipliers() const;
};

enum class CertStatus { Uncertified, CopositiveCertified, InnerApproxCertified };
enum class DualSource {
  None,
  CuttingPlaneFull,
  CuttingPlaneReduced,
  SdpInnerFull,
  SdpInnerReduced,
  LpRelaxation
};

struct DualSolution {
  std::vector<double> lam1, lam2, lam3, lam4;
  std::vector<double> Lam1, Lam2, Lam3, Lam4;
  std::vector<double> delta;
  double objective = 0.0;  // welfare scale (frozen cost already netted out)
  CertStatus status = CertStatus::Uncertified;
  DualSource source = DualSource::None;

  bool has_capacity_family() const { return !lam3.empty(); }
};

// h-vectors of the four constraint families, embedded as length-N sparse
// vectors with their right-hand sides.
std::array<std::vector<Constraint>, 4> build_h_vectors(const StandardForm& sf);

CopData build_cop_data(const StandardForm& sf, const Instance& inst);

// Lifting of the reduced model with the power schedule frozen at p*:
// variables (x, phi, psi, xi), reduced N = 2IJ + JT + I. The energy
// family keeps rhs -sum_t s_i(t) p*_j(t).
CopData build_reduced_cop_data(const Instance& inst, const Assignment& a);

// Stacked optimal point matching cd's variable layout.
std::vector<double> lifted_z_star(const CopData& cd, const Instance& inst,
                                  const Assignment& a);

// Stationarity map: Omega = Qt + sum lam H + sum Lam Ht + sum delta B.
// Linear in the multipliers; with all multipliers zero, Omega = Qt.
Matrix omega_from_duals(const CopData& cd, const DualSolution& d);

// Dual objective on the welfare scale: sum_k b_k lam_k + b_k^2 Lam_k over
// all families present, minus the frozen cost of a reduced model.
double dual_objective(const CopData& cd, const DualSolution& d);

// The full-lifting objective written out:
// sum_jt (lam2 + Lam2 + G lam3 + G^2 Lam3) + sum_i (lam4 + Lam4).
double cop_objective(const DualSolution& d, const Instance& inst);

// Flat multiplier vector <-> DualSolution, layout [lam1..lam4, Lam1..Lam4, delta].
std::vector<double> flatten_duals(const CopData& cd, const DualSolution& d);
DualSolution unflatten_duals(const CopData& cd, const std::vector<double>& theta);
// true for components whose nonnegativity follows from copositivity
// (lam2, lam3, lam4 and the matching Lam families).
std::vector<bool> sign_constrained_mask(const CopData& cd);

}  // namespace copoprice
