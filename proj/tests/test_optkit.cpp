#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "copoprice/milp.hpp"
#include "copoprice/optkit.hpp"
#include "test_util.hpp"

using namespace copoprice;

namespace {

std::uint64_t rng_state = 42;
std::uint64_t next_u64() {
  rng_state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = rng_state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
double unit() { return (next_u64() >> 11) * 0x1.0p-53; }

Matrix random_symmetric(int n, double scale) {
  Matrix M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double v = scale * (2.0 * unit() - 1.0);
      M(i, j) = v;
      M(j, i) = v;
    }
  return M;
}

}  // namespace

TEST_CASE("one-variable LP with dual") {
  DenseLp lp;
  lp.A = Matrix(1, 2);
  lp.A(0, 0) = 1.0;
  lp.A(0, 1) = 1.0;
  lp.b = {1.0};
  lp.c = {-1.0, 0.0};
  LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.u[0] == doctest::Approx(1.0));
  CHECK(sol.objective == doctest::Approx(-1.0));
  CHECK(sol.y[0] == doctest::Approx(-1.0));
}

TEST_CASE("infeasible and unbounded statuses") {
  DenseLp bad;
  bad.A = Matrix(1, 1);
  bad.A(0, 0) = 1.0;
  bad.b = {-1.0};
  bad.c = {1.0};
  CHECK(solve_lp(bad).status == LpStatus::Infeasible);

  DenseLp unb;  // min -u1 with u1 - u2 = 0: both can grow forever
  unb.A = Matrix(1, 2);
  unb.A(0, 0) = 1.0;
  unb.A(0, 1) = -1.0;
  unb.b = {0.0};
  unb.c = {-1.0, 0.0};
  CHECK(solve_lp(unb).status == LpStatus::Unbounded);
}

TEST_CASE("lower and upper bounds") {
  DenseLp lp;  // min u1 s.t. u1 + u2 = 5, u1 >= 2, u2 <= 2
  lp.A = Matrix(1, 2);
  lp.A(0, 0) = 1.0;
  lp.A(0, 1) = 1.0;
  lp.b = {5.0};
  lp.c = {1.0, 0.0};
  lp.lower = {2.0, 0.0};
  lp.upper = {std::nullopt, 2.0};
  LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.u[0] == doctest::Approx(3.0));
  CHECK(sol.u[1] == doctest::Approx(2.0));
}

TEST_CASE("strong duality on random feasible programs") {
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 3 + static_cast<int>(next_u64() % 5);
    const int n = m + 2 + static_cast<int>(next_u64() % 6);
    DenseLp lp;
    lp.A = Matrix(m, n);
    lp.c.assign(n, 0.0);
    for (int r = 0; r < m; ++r)
      for (int k = 0; k < n; ++k) lp.A(r, k) = 2.0 * unit() - 1.0;
    std::vector<double> x0(n);
    for (int k = 0; k < n; ++k) x0[k] = unit();
    lp.b.assign(m, 0.0);
    for (int r = 0; r < m; ++r)
      for (int k = 0; k < n; ++k) lp.b[r] += lp.A(r, k) * x0[k];
    for (int k = 0; k < n; ++k) lp.c[k] = unit();  // nonnegative => bounded

    LpSolution sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    double feas = 0.0;
    for (int r = 0; r < m; ++r) {
      double lhs = -lp.b[r];
      for (int k = 0; k < n; ++k) lhs += lp.A(r, k) * sol.u[k];
      feas = std::max(feas, std::fabs(lhs));
    }
    CHECK(feas <= 1e-8);
    double yb = 0.0;
    for (int r = 0; r < m; ++r) yb += sol.y[r] * lp.b[r];
    CHECK(std::fabs(yb - sol.objective) <= 1e-8);
  }
}

TEST_CASE("jacobi eigensolver") {
  Matrix I3 = Matrix::identity(3);
  EigResult e = sym_eig(I3);
  for (double w : e.w) CHECK(w == doctest::Approx(1.0));

  Matrix M(2, 2);
  M(0, 0) = 2.0;
  M(0, 1) = 1.0;
  M(1, 0) = 1.0;
  M(1, 1) = 2.0;
  e = sym_eig(M);
  CHECK(e.w[0] == doctest::Approx(1.0));
  CHECK(e.w[1] == doctest::Approx(3.0));

  Matrix R = random_symmetric(20, 3.0);
  e = sym_eig(R);
  const double scale = std::max(1.0, R.max_abs());
  Matrix recon(20, 20);
  for (int k = 0; k < 20; ++k)
    for (int i = 0; i < 20; ++i)
      for (int j = 0; j < 20; ++j) recon(i, j) += e.w[k] * e.V(i, k) * e.V(j, k);
  double err = 0.0, orth = 0.0;
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j) {
      err = std::max(err, std::fabs(recon(i, j) - R(i, j)));
      double dot = 0.0;
      for (int k = 0; k < 20; ++k) dot += e.V(k, i) * e.V(k, j);
      orth = std::max(orth, std::fabs(dot - (i == j ? 1.0 : 0.0)));
    }
  CHECK(err <= 1e-10 * scale);
  CHECK(orth <= 1e-10);

  Matrix bad(2, 2);
  bad(0, 1) = 1.0;
  bad(1, 0) = 2.0;
  CHECK_THROWS_AS(sym_eig(bad), std::invalid_argument);
}

TEST_CASE("psd projection") {
  Matrix D(2, 2);
  D(0, 0) = 2.0;
  D(1, 1) = -3.0;
  Matrix P = project_psd(D);
  CHECK(P(0, 0) == doctest::Approx(2.0));
  CHECK(P(1, 1) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::fabs(P(0, 1)) <= 1e-12);

  // Idempotent on the cone.
  Matrix S = random_symmetric(8, 1.0);
  Matrix SP = project_psd(S);
  Matrix SPP = project_psd(SP);
  for (size_t k = 0; k < SP.a.size(); ++k) CHECK(std::fabs(SPP.a[k] - SP.a[k]) <= 1e-10);

  // Minimum eigenvalue property.
  EigResult e = sym_eig(SP);
  CHECK(e.w.front() >= -1e-10 * std::max(1.0, S.max_abs()));

  // Sampling oracle: no sampled PSD matrix is closer in Frobenius norm.
  Matrix M = random_symmetric(6, 2.0);
  Matrix best = project_psd(M);
  double dbest = 0.0;
  for (size_t k = 0; k < M.a.size(); ++k) {
    const double d = M.a[k] - best.a[k];
    dbest += d * d;
  }
  for (int trial = 0; trial < 200; ++trial) {
    Matrix C = project_psd(random_symmetric(6, 2.5));
    double dc = 0.0;
    for (size_t k = 0; k < M.a.size(); ++k) {
      const double d = M.a[k] - C.a[k];
      dc += d * d;
    }
    CHECK(dc >= dbest - 1e-9);
  }
}

TEST_CASE("welfare relaxation bounds and duals") {
  Instance t1 = coptest::table1();
  LpRelaxation rel = solve_lp_relaxation(t1);
  REQUIRE(rel.status == LpStatus::Optimal);
  Assignment exact = solve_exhaustive(t1);
  CHECK(rel.objective >= exact.objective - 1e-9);

  for (int j = 0; j < t1.num_evses(); ++j)
    for (int t = 0; t < t1.T; ++t) {
      CHECK(rel.mu_occupancy(j, t) >= 0.0);
      CHECK(rel.mu_capacity(j, t) >= 0.0);
    }

  Instance tiny = coptest::one_one_one();
  LpRelaxation r1 = solve_lp_relaxation(tiny);
  REQUIRE(r1.status == LpStatus::Optimal);
  CHECK(r1.objective == doctest::Approx(1.5));
  CHECK(r1.x(0, 0) == doctest::Approx(1.0));

  // Spare EVSEs with nobody parked: strictly slack occupancy rows price at zero.
  Instance spare;
  spare.T = 2;
  spare.grid_price = {0.1, 0.2};
  spare.evses = {{{5.0, 5.0}}, {{5.0, 5.0}}, {{5.0, 5.0}}};
  spare.evs = {{3.0, 2.0, 1, 1}, {3.0, 2.0, 2, 2}};
  LpRelaxation rs = solve_lp_relaxation(spare);
  REQUIRE(rs.status == LpStatus::Optimal);
  Assignment se = solve_exhaustive(spare);
  CHECK(rs.objective >= se.objective - 1e-9);
  for (int j = 0; j < 3; ++j)
    for (int t = 0; t < 2; ++t) CHECK(rs.mu_occupancy(j, t) <= 1e-7);
}
