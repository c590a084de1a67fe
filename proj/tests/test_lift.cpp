#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "copoprice/lift.hpp"
#include "test_util.hpp"

using namespace copoprice;

namespace {

double constraint_value(const Constraint& c, const std::vector<double>& z) {
  double s = 0.0;
  for (auto& [pos, coef] : c.h) s += coef * z[pos];
  return s;
}

DualSolution zero_duals(const CopData& cd) {
  return unflatten_duals(cd, std::vector<double>(cd.num_multipliers(), 0.0));
}

}  // namespace

TEST_CASE("h-vectors match the constraint families") {
  Instance t1 = coptest::table1();
  StandardForm sf = build_standard_form(t1);
  auto fams = build_h_vectors(sf);
  CHECK(fams[0].size() == 15);
  CHECK(fams[1].size() == 18);
  CHECK(fams[2].size() == 18);
  CHECK(fams[3].size() == 5);

  const VarIndex& ix = sf.index;
  for (const Constraint& c : fams[2]) {  // capacity: (1, 1) on (p, zeta)
    REQUIRE(c.h.size() == 2);
    CHECK(c.h[0].first == ix.p(c.j, c.t));
    CHECK(c.h[0].second == 1.0);
    CHECK(c.h[1].first == ix.zeta(c.j, c.t));
    CHECK(c.h[1].second == 1.0);
    CHECK(c.rhs == t1.evses[c.j].capacity[c.t]);
  }
  for (const Constraint& c : fams[3]) {  // uniqueness: all-ones over x row + xi
    REQUIRE(c.h.size() == 4);
    for (int j = 0; j < 3; ++j) {
      CHECK(c.h[j].first == ix.x(c.i, j));
      CHECK(c.h[j].second == 1.0);
    }
    CHECK(c.h[3].first == ix.xi(c.i));
    CHECK(c.h[3].second == 1.0);
    CHECK(c.rhs == 1.0);
  }

  // Every family evaluates to its rhs at a feasible point.
  Assignment a = solve_milp(t1);
  CopData cd = build_cop_data(sf, t1);
  std::vector<double> z = lifted_z_star(cd, t1, a);
  for (int f = 0; f < 4; ++f)
    for (const Constraint& c : cd.fam[f])
      CHECK(constraint_value(c, z) == doctest::Approx(c.rhs).epsilon(1e-12));
}

TEST_CASE("lifted point satisfies every conic constraint") {
  Instance t1 = coptest::table1();
  Assignment a = solve_milp(t1);
  StandardForm sf = build_standard_form(t1);
  CopData cd = build_cop_data(sf, t1);
  CHECK(cd.n == 90);
  std::vector<double> z = lifted_z_star(cd, t1, a);

  // Squared level: (h'z)^2 equals rhs^2; occupancy squares stay at one.
  for (int f = 0; f < 4; ++f)
    for (const Constraint& c : cd.fam[f]) {
      const double hz = constraint_value(c, z);
      CHECK(hz * hz == doctest::Approx(c.rhs * c.rhs).epsilon(1e-12));
      if (c.family == ConFamily::Occupancy)
        CHECK(hz * hz == doctest::Approx(1.0).epsilon(1e-12));
    }
  // Consistency rows vanish on binary assignments.
  for (int xp : cd.x_pos) CHECK(z[xp] - z[xp] * z[xp] == doctest::Approx(0.0));
}

TEST_CASE("omega is the bordered objective at zero duals and is linear") {
  Instance t1 = coptest::table1();
  StandardForm sf = build_standard_form(t1);
  CopData cd = build_cop_data(sf, t1);

  Matrix W0 = omega_from_duals(cd, zero_duals(cd));
  for (int k = 0; k < cd.N; ++k) {
    CHECK(W0(0, k + 1) == doctest::Approx(0.5 * cd.q[k]));
    CHECK(W0(k + 1, 0) == doctest::Approx(0.5 * cd.q[k]));
  }
  for (int r = 1; r < cd.n; ++r)
    for (int c = 1; c < cd.n; ++c) CHECK(W0(r, c) == 0.0);
  // The objective border carries -v on x and pi on p.
  const VarIndex& ix = sf.index;
  CHECK(W0(0, ix.x(0, 0) + 1) == doctest::Approx(-1.0));  // v_1 = 2
  CHECK(W0(0, ix.p(0, 0) + 1) == doctest::Approx(0.05));  // pi_1 = 0.1

  std::vector<double> theta(cd.num_multipliers());
  std::uint64_t s = 9;
  for (double& x : theta) {
    s = s * 6364136223846793005ULL + 1442695040888963407ULL;
    x = static_cast<double>((s >> 33) % 1000) / 250.0 - 2.0;
  }
  std::vector<double> theta2 = theta;
  for (double& x : theta2) x *= 2.0;
  Matrix W1 = omega_from_duals(cd, unflatten_duals(cd, theta));
  Matrix W2 = omega_from_duals(cd, unflatten_duals(cd, theta2));
  for (size_t k = 0; k < W1.a.size(); ++k)
    CHECK(W2.a[k] - W0.a[k] ==
          doctest::Approx(2.0 * (W1.a[k] - W0.a[k])).epsilon(1e-9));
}

TEST_CASE("squared-constraint blocks are positive semidefinite") {
  Instance t1 = coptest::table1();
  StandardForm sf = build_standard_form(t1);
  CopData cd = build_cop_data(sf, t1);
  DualSolution d = zero_duals(cd);
  d.Lam1[4] = 1.0;
  d.Lam2[7] = 1.0;
  d.Lam4[2] = 1.0;
  Matrix W = omega_from_duals(cd, d);
  Matrix Q0 = omega_from_duals(cd, zero_duals(cd));
  for (size_t k = 0; k < W.a.size(); ++k) W.a[k] -= Q0.a[k];
  EigResult e = sym_eig(W);
  CHECK(e.w.front() >= -1e-10);
}

TEST_CASE("dual objective formulas") {
  Instance t1 = coptest::table1();
  StandardForm sf = build_standard_form(t1);
  CopData cd = build_cop_data(sf, t1);

  DualSolution d = zero_duals(cd);
  CHECK(cop_objective(d, t1) == 0.0);
  CHECK(dual_objective(cd, d) == 0.0);

  d.lam4[1] = 1.0;
  CHECK(cop_objective(d, t1) == doctest::Approx(1.0));

  std::uint64_t s = 77;
  auto rnd = [&] {
    s = s * 6364136223846793005ULL + 1442695040888963407ULL;
    return static_cast<double>((s >> 33) % 1000) / 500.0 - 1.0;
  };
  for (auto* v : {&d.lam1, &d.lam2, &d.lam3, &d.lam4, &d.Lam1, &d.Lam2, &d.Lam3,
                  &d.Lam4, &d.delta})
    for (double& x : *v) x = rnd();
  // On the full lifting the general family sum reduces to the written-out
  // objective: the energy family has zero rhs.
  CHECK(cop_objective(d, t1) == doctest::Approx(dual_objective(cd, d)).epsilon(1e-12));
}

TEST_CASE("reduced lifting drops the power block") {
  Instance t1 = coptest::table1();
  Assignment a = solve_milp(t1);
  CopData rd = build_reduced_cop_data(t1, a);
  CHECK(rd.N == 53);
  CHECK(rd.n == 54);
  CHECK(rd.fam[2].empty());
  CHECK(rd.frozen_cost == doctest::Approx(3.3));

  std::vector<double> z = lifted_z_star(rd, t1, a);
  for (int f = 0; f < 4; ++f)
    for (const Constraint& c : rd.fam[f])
      CHECK(constraint_value(c, z) == doctest::Approx(c.rhs).epsilon(1e-12));

  // Energy rows carry the posted-power constant on the right-hand side.
  for (const Constraint& c : rd.fam[0]) {
    double posted = 0.0;
    for (int t = 0; t < t1.T; ++t)
      if (availability(t1, c.i + 1, t + 1)) posted += a.p(c.j, t);
    CHECK(c.rhs == doctest::Approx(-posted));
  }

  // Reduced dual objective needs no capacity family and nets out the
  // frozen energy cost.
  DualSolution d = zero_duals(rd);
  CHECK_THROWS_AS(cop_objective(d, t1), std::invalid_argument);
  CHECK(dual_objective(rd, d) == doctest::Approx(-3.3));
  d.lam4[0] = 2.0;
  CHECK(dual_objective(rd, d) == doctest::Approx(2.0 - 3.3));
}
