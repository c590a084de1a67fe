#pragma once

#include <string>
#include <vector>

#include "copoprice/lift.hpp"
#include "copoprice/milp.hpp"

namespace copoprice {

enum class Mechanism { CMP, CMP_R, CMP_RS, TOU, CRP };

const char* mechanism_name(Mechanism m);
Mechanism mechanism_from_name(const std::string& s);  // throws on unknown

// Per-user payment split. total = ls_e + ls_i + congestion.
struct PriceRow {
  int user = 0;  // 0-based
  Mechanism mechanism = Mechanism::TOU;
  double ls_e = 0.0;
  double ls_i = 0.0;
  double congestion = 0.0;
  double total = 0.0;
  bool certified = false;
};

// Energy lump sum: sum_jt pi(t) p*_j(t) s_i(t) x_ij, p* from a.
double rho_ls_e(const Instance& inst, const Assignment& a, int i,
                const std::vector<double>& x_i);

// Capacity shadow price: sum_jt (lam3 + G Lam3) p*_j(t) s_i(t) x_ij.
// Throws when the duals lack the capacity family (reduced model).
double rho_ls_i(const Instance& inst, const Assignment& a, const DualSolution& d,
                int i, const std::vector<double>& x_i);

// Congestion charge:
// sum_jt (lam2 + Lam2 (1 + 2 sum_{l!=i} s_l(t) x_lj + 2 psi*_jt)) s_i(t) x_ij.
// x_minus and psi_star come from the assignment being priced against.
double rho_c(const Instance& inst, const DualSolution& d, int i,
             const std::vector<double>& x_i, const Matrix& x_minus,
             const Matrix& psi_star);

// Payment for a hypothetical choice x_i of user i with everyone else held
// at a. Dual sourcing is enforced: CMP needs the full cutting-plane dual,
// CMP-R the reduced cutting-plane, CMP-RS the reduced splitting solver,
// CRP the relaxation duals, TOU none (pass nullptr).
PriceRow price(const Instance& inst, const Assignment& a, const DualSolution* duals,
               Mechanism mech, int i, const std::vector<double>& x_i);

// Rows for every user at the central optimum (x_i = a.x row i).
std::vector<PriceRow> price_at_optimum(const Instance& inst, const Assignment& a,
                                       const DualSolution* duals, Mechanism mech);

// Relaxation duals packaged for CRP: mu2 -> lam2, mu3 -> lam3, Lam = 0.
DualSolution duals_from_relaxation(const Instance& inst, const Matrix& mu_occupancy,
                                   const Matrix& mu_capacity);

}  // namespace copoprice
