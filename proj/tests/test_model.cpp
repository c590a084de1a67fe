#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "copoprice/model.hpp"
#include "test_util.hpp"

using namespace copoprice;

TEST_CASE("availability windows are inclusive") {
  Instance inst = coptest::table1();
  CHECK(availability(inst, 1, 1) == 1);
  CHECK(availability(inst, 1, 2) == 1);
  CHECK(availability(inst, 1, 3) == 1);
  CHECK(availability(inst, 1, 4) == 0);
  CHECK(availability(inst, 4, 5) == 1);
  CHECK(availability(inst, 4, 6) == 0);
  CHECK_THROWS_AS(availability(inst, 0, 1), std::out_of_range);
  CHECK_THROWS_AS(availability(inst, 1, 7), std::out_of_range);

  // Full-window EV is parked everywhere.
  Instance full = coptest::one_one_one();
  for (int t = 1; t <= full.T; ++t) CHECK(availability(full, 1, t) == 1);

  // Window length identity.
  for (int i = 1; i <= inst.num_evs(); ++i) {
    int total = 0;
    for (int t = 1; t <= inst.T; ++t) total += availability(inst, i, t);
    CHECK(total == inst.evs[i - 1].t_plus - inst.evs[i - 1].t_minus + 1);
  }
}

TEST_CASE("variable layout partitions [0, N)") {
  for (auto [I, J, T] : {std::tuple{5, 3, 6}, {25, 5, 6}, {1, 1, 1}, {3, 2, 4}}) {
    VarIndex ix = VarIndex::make(I, J, T);
    CHECK(ix.N == 2 * I * J + 3 * J * T + I);
    std::set<int> seen;
    for (int i = 0; i < I; ++i)
      for (int j = 0; j < J; ++j) {
        seen.insert(ix.x(i, j));
        seen.insert(ix.phi(i, j));
      }
    for (int j = 0; j < J; ++j)
      for (int t = 0; t < T; ++t) {
        seen.insert(ix.p(j, t));
        seen.insert(ix.psi(j, t));
        seen.insert(ix.zeta(j, t));
      }
    for (int i = 0; i < I; ++i) seen.insert(ix.xi(i));
    CHECK(static_cast<int>(seen.size()) == ix.N);
    CHECK(*seen.begin() == 0);
    CHECK(*seen.rbegin() == ix.N - 1);
  }
}

TEST_CASE("standard form dimensions and supports") {
  Instance inst = coptest::table1();
  StandardForm sf = build_standard_form(inst);
  CHECK(sf.index.N == 89);
  CHECK(sf.constraints.size() == 15 + 18 + 18 + 5);

  Instance big = random_instance(1, 25, 5, 6);
  CHECK(build_standard_form(big).index.N == 365);

  Instance tiny = coptest::one_one_one();
  StandardForm tf = build_standard_form(tiny);
  CHECK(tf.index.N == 6);
  CHECK(tf.constraints.size() == 4);

  const VarIndex& ix = sf.index;
  for (const Constraint& c : sf.constraints) {
    std::set<int> support;
    for (auto& [pos, coef] : c.h) {
      support.insert(pos);
      CHECK(coef != 0.0);
    }
    switch (c.family) {
      case ConFamily::Energy: {
        CHECK(c.rhs == 0.0);
        std::set<int> want{ix.x(c.i, c.j), ix.phi(c.i, c.j)};
        for (int t = 0; t < inst.T; ++t)
          if (availability(inst, c.i + 1, t + 1)) want.insert(ix.p(c.j, t));
        CHECK(support == want);
        break;
      }
      case ConFamily::Occupancy: {
        CHECK(c.rhs == 1.0);
        CHECK(support.count(ix.psi(c.j, c.t)) == 1);
        break;
      }
      case ConFamily::Capacity: {
        CHECK(c.rhs == inst.evses[c.j].capacity[c.t]);
        std::set<int> want{ix.p(c.j, c.t), ix.zeta(c.j, c.t)};
        CHECK(support == want);
        break;
      }
      case ConFamily::Uniqueness: {
        CHECK(c.rhs == 1.0);
        CHECK(support.count(ix.xi(c.i)) == 1);
        CHECK(support.size() == static_cast<size_t>(inst.num_evses()) + 1);
        break;
      }
    }
  }
}

namespace {

bool same_instance(const Instance& a, const Instance& b) {
  if (a.T != b.T || a.grid_price != b.grid_price) return false;
  if (a.evses.size() != b.evses.size() || a.evs.size() != b.evs.size()) return false;
  for (size_t j = 0; j < a.evses.size(); ++j)
    if (a.evses[j].capacity != b.evses[j].capacity) return false;
  for (size_t i = 0; i < a.evs.size(); ++i) {
    if (a.evs[i].v != b.evs[i].v || a.evs[i].e != b.evs[i].e) return false;
    if (a.evs[i].t_minus != b.evs[i].t_minus || a.evs[i].t_plus != b.evs[i].t_plus)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("random instances are deterministic and valid") {
  Instance a = random_instance(7, 4, 2, 3);
  Instance b = random_instance(7, 4, 2, 3);
  CHECK(same_instance(a, b));
  Instance c = random_instance(8, 4, 2, 3);
  CHECK(!same_instance(a, c));

  Instance big = random_instance(1, 25, 5, 6);
  CHECK(big.num_evs() == 25);
  CHECK_NOTHROW(big.validate());

  GenRanges fixed;
  fixed.e_min = fixed.e_max = 5.0;
  Instance deg = random_instance(3, 6, 2, 4, fixed);
  for (const auto& ev : deg.evs) CHECK(ev.e == 5.0);

  GenRanges bad;
  bad.v_min = 3.0;
  bad.v_max = 1.0;
  CHECK_THROWS_AS(random_instance(1, 2, 1, 2, bad), std::invalid_argument);
  GenRanges badw;
  badw.min_window = 9;
  CHECK_THROWS_AS(random_instance(1, 2, 1, 2, badw), std::invalid_argument);
}

TEST_CASE("instance serialization") {
  Instance t1 = coptest::table1();
  CHECK(t1.num_evs() == 5);
  CHECK(t1.evs[0].v == 2.0);
  CHECK(t1.evs[1].v == 2.0);
  CHECK(t1.evs[2].v == 5.0);
  CHECK(t1.evs[3].v == 4.0);
  CHECK(t1.evs[4].v == 2.0);
  CHECK(t1.grid_price == std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5, 0.6});
  for (const auto& e : t1.evses)
    for (double g : e.capacity) CHECK(g == 10.0);

  Instance rnd = random_instance(11, 5, 2, 4);
  Instance back = load_instance(save_instance(rnd));
  CHECK(same_instance(rnd, back));

  CHECK_THROWS_WITH_AS(
      load_instance(R"({"T":2,"grid_price":[1,1],"evses":[{"capacity":[1,1]}],
                        "evs":[{"v":1,"e":1,"t_minus":1,"t_plus":3}]})"),
      "instance: evs[0].t_plus must be <= T", std::runtime_error);
  CHECK_THROWS_AS(load_instance("{\"T\": 2}"), std::runtime_error);
  CHECK_THROWS_AS(load_instance("not json"), std::runtime_error);
}
