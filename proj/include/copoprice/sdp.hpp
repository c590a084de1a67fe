#pragma once

#include "copoprice/cop.hpp"
#include "copoprice/lift.hpp"

namespace copoprice {

struct SdpOptions {
  double penalty = 1.0;      // splitting penalty, residual-balanced
  double over_relax = 1.6;
  double eps_abs = 1e-6;
  double eps_rel = 1e-6;
  int max_iters = 50000;
};

// Solves the dual with the copositivity constraint tightened to
// Omega in PSD + N. Alternates an equality-constrained least-squares step
// over (theta, P, M) on {Omega(theta) = P + M, Tr(Y* Omega) = 0} - the
// affine system is factored once - with cone projections P <- psd,
// M <- max(.,0) and a clamp of the sign-constrained multipliers. On
// convergence the returned Omega = P + M is copositive by inclusion and
// the result is InnerApproxCertified; otherwise Uncertified with the
// feasibility residual attached.
CopSolveResult solve_cop_sdp_inner(const CopData& cd, const Instance& inst,
                                   const std::vector<double>& z_star,
                                   double milp_obj, const SdpOptions& opts = {});

}  // namespace copoprice
