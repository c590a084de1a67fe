#pragma once

#include <string>
#include <vector>

#include "copoprice/milp.hpp"
#include "copoprice/model.hpp"
#include "copoprice/optkit.hpp"

namespace coptest {

inline std::string table1_path() { return std::string(COPOPRICE_DATA_DIR) + "/table1.json"; }

inline copoprice::Instance table1() {
  return copoprice::load_instance_file(table1_path());
}

// Smallest nontrivial scenario: one EV (v=2, e=1), one EVSE (G=5), one
// slot at price 0.5. Optimum serves the EV at welfare 1.5.
inline copoprice::Instance one_one_one() {
  copoprice::Instance inst;
  inst.T = 1;
  inst.grid_price = {0.5};
  inst.evses.push_back({{5.0}});
  inst.evs.push_back({2.0, 1.0, 1, 1});
  return inst;
}

// Deterministic family of small scenarios for property suites.
inline std::vector<copoprice::Instance> small_instances(int count) {
  std::vector<copoprice::Instance> out;
  copoprice::GenRanges r;
  r.v_min = 0.5;
  r.v_max = 5.0;
  r.e_min = 1.0;
  r.e_max = 9.0;
  r.min_window = 1;
  r.capacity = 5.0;
  for (int s = 1; s <= count; ++s) {
    const int I = 1 + (s % 4);
    const int J = 1 + (s % 2);
    const int T = 1 + (s % 3);
    out.push_back(copoprice::random_instance(static_cast<std::uint64_t>(s), I, J, T, r));
  }
  return out;
}

// Cost-minimal schedule for a fixed assignment via the LP kernel; a route
// independent of the greedy scheduler it checks.
inline double lp_power_cost(const copoprice::Instance& inst, const copoprice::Matrix& x) {
  using namespace copoprice;
  const int J = inst.num_evses(), T = inst.T;
  const int np = J * T;
  int nass = 0;
  for (int i = 0; i < inst.num_evs(); ++i)
    for (int j = 0; j < J; ++j)
      if (x(i, j) > 0.5) ++nass;

  DenseLp lp;
  lp.A = Matrix(nass + np, np + nass + np);
  lp.b.assign(nass + np, 0.0);
  lp.c.assign(np + nass + np, 0.0);
  for (int j = 0; j < J; ++j)
    for (int t = 0; t < T; ++t) lp.c[j * T + t] = inst.grid_price[t];
  int r = 0;
  for (int i = 0; i < inst.num_evs(); ++i)
    for (int j = 0; j < J; ++j) {
      if (x(i, j) < 0.5) continue;
      for (int t = 0; t < T; ++t)
        if (availability(inst, i + 1, t + 1)) lp.A(r, j * T + t) = 1.0;
      lp.A(r, np + r) = -1.0;  // surplus
      lp.b[r] = inst.evs[i].e;
      ++r;
    }
  for (int j = 0; j < J; ++j)
    for (int t = 0; t < T; ++t) {
      lp.A(r, j * T + t) = 1.0;
      lp.A(r, np + nass + j * T + t) = 1.0;  // capacity slack
      lp.b[r] = inst.evses[j].capacity[t];
      ++r;
    }
  LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::Optimal) return -1.0;
  return sol.objective;
}

}  // namespace coptest
