#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "copoprice/milp.hpp"
#include "test_util.hpp"

using namespace copoprice;

namespace {

double schedule_cost(const Instance& inst, const Matrix& p) {
  double c = 0.0;
  for (int j = 0; j < inst.num_evses(); ++j)
    for (int t = 0; t < inst.T; ++t) c += inst.grid_price[t] * p(j, t);
  return c;
}

bool lemma2_holds(const Instance& inst, const Assignment& a) {
  for (int j = 0; j < inst.num_evses(); ++j)
    for (int t = 0; t < inst.T; ++t) {
      double occ = 0.0;
      for (int i = 0; i < inst.num_evs(); ++i)
        if (availability(inst, i + 1, t + 1)) occ += a.x(i, j);
      if (std::fabs(a.p(j, t) * (1.0 - occ)) > 1e-9) return false;
    }
  return true;
}

}  // namespace

TEST_CASE("greedy schedule fills cheapest slots") {
  Instance t1 = coptest::table1();
  Matrix x(5, 3);

  x(0, 0) = 1.0;  // user 1 on EVSE 1
  PowerResult pr = schedule_power(t1, x);
  REQUIRE(pr.feasible);
  CHECK(pr.p(0, 0) == doctest::Approx(3.0));
  for (int t = 1; t < 6; ++t) CHECK(pr.p(0, t) == 0.0);
  CHECK(schedule_cost(t1, pr.p) == doctest::Approx(0.3));

  Matrix zero(5, 3);
  PowerResult pz = schedule_power(t1, zero);
  REQUIRE(pz.feasible);
  for (double v : pz.p.a) CHECK(v == 0.0);

  Matrix x4(5, 3);
  x4(3, 2) = 1.0;  // user 4 (e=16, window [1,5]) alone
  PowerResult p4 = schedule_power(t1, x4);
  REQUIRE(p4.feasible);
  CHECK(p4.p(2, 0) == doctest::Approx(10.0));
  CHECK(p4.p(2, 1) == doctest::Approx(6.0));
  CHECK(schedule_cost(t1, p4.p) == doctest::Approx(2.2));
}

TEST_CASE("schedule rejects bad assignments") {
  Instance t1 = coptest::table1();
  Matrix clash(5, 3);
  clash(0, 0) = 1.0;  // users 1 and 2 overlap on EVSE 1
  clash(1, 0) = 1.0;
  PowerResult pr = schedule_power(t1, clash);
  CHECK(!pr.feasible);
  CHECK(pr.bad_j == 0);
  CHECK(pr.bad_t >= 0);

  Instance small = coptest::one_one_one();
  small.evs[0].e = 50.0;  // more than the window can carry
  Matrix x(1, 1);
  x(0, 0) = 1.0;
  CHECK(!schedule_power(small, x).feasible);
}

TEST_CASE("greedy schedule cost matches the LP route") {
  auto instances = coptest::small_instances(12);
  for (const auto& inst : instances) {
    Assignment a = solve_milp(inst);
    const double greedy = schedule_cost(inst, a.p);
    const double lp = coptest::lp_power_cost(inst, a.x);
    REQUIRE(lp >= 0.0);
    CHECK(greedy == doctest::Approx(lp).epsilon(1e-9));
  }
}

TEST_CASE("welfare arithmetic") {
  Instance t1 = coptest::table1();
  Matrix x(5, 3), p(3, 6);
  CHECK(welfare(t1, x, p) == 0.0);

  x(2, 0) = 1.0;  // user 3 alone: 5 - 0.8
  p(0, 0) = 8.0;
  CHECK(welfare(t1, x, p) == doctest::Approx(4.2));
}

TEST_CASE("branch and bound reproduces the reference scenario") {
  Instance t1 = coptest::table1();
  Assignment a = solve_milp(t1);
  CHECK(a.objective == doctest::Approx(7.7).epsilon(1e-12));
  CHECK(a.assigned_evse(0) == 0);
  CHECK(a.assigned_evse(1) == -1);
  CHECK(a.assigned_evse(2) == 1);
  CHECK(a.assigned_evse(3) == 2);
  CHECK(a.assigned_evse(4) == -1);
  CHECK(lemma2_holds(t1, a));

  Assignment ex = solve_exhaustive(t1);
  CHECK(ex.objective == doctest::Approx(a.objective));
  for (size_t k = 0; k < a.x.a.size(); ++k) CHECK(a.x.a[k] == ex.x.a[k]);
}

TEST_CASE("tiny scenario enumerates to 1.5") {
  Instance tiny = coptest::one_one_one();
  Assignment a = solve_milp(tiny);
  CHECK(a.x(0, 0) == 1.0);
  CHECK(a.p(0, 0) == doctest::Approx(1.0));
  CHECK(a.objective == doctest::Approx(1.5));
}

TEST_CASE("branch and bound equals exhaustive enumeration") {
  auto instances = coptest::small_instances(15);
  GenRanges r;
  r.capacity = 8.0;
  instances.push_back(random_instance(101, 5, 3, 4, r));
  instances.push_back(random_instance(102, 6, 3, 3, r));
  for (const auto& inst : instances) {
    Assignment bb = solve_milp(inst);
    Assignment ex = solve_exhaustive(inst);
    CHECK(bb.objective == doctest::Approx(ex.objective).epsilon(1e-9));
    CHECK(lemma2_holds(inst, bb));
  }
}

TEST_CASE("node limit raises with incumbent attached") {
  Instance t1 = coptest::table1();
  BnbOptions opts;
  opts.node_limit = 1;
  try {
    solve_milp(t1, opts);
    FAIL("expected NodeLimitError");
  } catch (const NodeLimitError& e) {
    CHECK(e.bound >= 7.7 - 1e-9);
  }
}

TEST_CASE("canonicalize relabels interchangeable EVSEs") {
  Instance t1 = coptest::table1();
  Assignment a = solve_milp(t1);

  // Shuffle the three identical EVSEs and re-canonicalize.
  Assignment shuffled = a;
  std::vector<int> perm{2, 0, 1};
  Matrix x(5, 3), p(3, 6), psi(3, 6), zeta(3, 6), phi(5, 3);
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < 5; ++i) {
      x(i, perm[j]) = a.x(i, j);
      phi(i, perm[j]) = a.phi(i, j);
    }
    for (int t = 0; t < 6; ++t) {
      p(perm[j], t) = a.p(j, t);
      psi(perm[j], t) = a.psi(j, t);
      zeta(perm[j], t) = a.zeta(j, t);
    }
  }
  shuffled.x = x;
  shuffled.p = p;
  shuffled.psi = psi;
  shuffled.zeta = zeta;
  shuffled.phi = phi;

  Assignment canon = canonicalize(t1, shuffled);
  CHECK(canon.objective == doctest::Approx(a.objective));
  for (size_t k = 0; k < canon.x.a.size(); ++k) CHECK(canon.x.a[k] == a.x.a[k]);
  for (size_t k = 0; k < canon.p.a.size(); ++k)
    CHECK(canon.p.a[k] == doctest::Approx(a.p.a[k]));

  // Idempotent.
  Assignment again = canonicalize(t1, canon);
  for (size_t k = 0; k < again.x.a.size(); ++k) CHECK(again.x.a[k] == canon.x.a[k]);

  // EVSEs with distinct capacity are never relabeled.
  Instance mixed = t1;
  mixed.evses[0].capacity[0] = 7.0;
  Assignment ma = solve_milp(mixed);
  Assignment mc = canonicalize(mixed, ma);
  for (size_t k = 0; k < ma.x.a.size(); ++k) CHECK(mc.x.a[k] == ma.x.a[k]);
}
