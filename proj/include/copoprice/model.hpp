#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace copoprice {

// One charging request. The availability window [t_minus, t_plus] is
// inclusive on both ends and 1-based.
struct EvRequest {
  double v = 0.0;   // valuation for full service
  double e = 0.0;   // total energy requirement, > 0
  int t_minus = 1;  // first available slot
  int t_plus = 1;   // last available slot
};

struct Evse {
  std::vector<double> capacity;  // per-slot power limit G_j(t), length T
};

struct Instance {
  int T = 0;
  std::vector<double> grid_price;  // pi(t), length T
  std::vector<Evse> evses;         // size J
  std::vector<EvRequest> evs;      // size I

  int num_evs() const { return static_cast<int>(evs.size()); }
  int num_evses() const { return static_cast<int>(evses.size()); }

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

// 1 iff EV i is parked at slot t. Both indices 1-based; throws
// std::out_of_range on bad indices.
int availability(const Instance& inst, int i, int t);

// Layout of the stacked decision vector z = [x, p, phi, psi, zeta, xi].
// The x and phi blocks are i-major over (i,j); p, psi and zeta are
// j-major over (j,t). All accessors take 0-based indices.
struct VarIndex {
  int I = 0, J = 0, T = 0;
  int N = 0;  // 2IJ + 3JT + I
  int x0 = 0, p0 = 0, phi0 = 0, psi0 = 0, zeta0 = 0, xi0 = 0;

  static VarIndex make(int I, int J, int T);

  int x(int i, int j) const { return x0 + i * J + j; }
  int p(int j, int t) const { return p0 + j * T + t; }
  int phi(int i, int j) const { return phi0 + i * J + j; }
  int psi(int j, int t) const { return psi0 + j * T + t; }
  int zeta(int j, int t) const { return zeta0 + j * T + t; }
  int xi(int i) const { return xi0 + i; }
};

enum class ConFamily { Energy, Occupancy, Capacity, Uniqueness };

// One scalar constraint h'z = rhs with a sparse coefficient vector.
struct Constraint {
  ConFamily family = ConFamily::Energy;
  int i = -1, j = -1, t = -1;  // 0-based tags; -1 where not applicable
  std::vector<std::pair<int, double>> h;
  double rhs = 0.0;
};

struct StandardForm {
  VarIndex index;
  std::vector<Constraint> constraints;  // energy, occupancy, capacity, uniqueness
};

// Equality form with slack variables in place:
//   sum_t s_i(t) p_j(t) - e_i x_ij - phi_ij   = 0        (energy, IJ)
//   sum_i s_i(t) x_ij + psi_jt                = 1        (occupancy, JT)
//   p_j(t) + zeta_jt                          = G_j(t)   (capacity, JT)
//   sum_j x_ij + xi_i                         = 1        (uniqueness, I)
StandardForm build_standard_form(const Instance& inst);

struct GenRanges {
  double v_min = 1.0, v_max = 6.0;
  double e_min = 3.0, e_max = 14.0;
  int min_window = 2;      // minimum window length in slots
  double capacity = 10.0;  // constant G for every EVSE and slot
};

// Deterministic for a fixed seed. Grid prices follow the 0.1*t profile.
// Throws std::invalid_argument on empty or inverted ranges.
Instance random_instance(std::uint64_t seed, int I, int J, int T,
                         const GenRanges& ranges = {});

// JSON (de)serialization. load_instance throws std::runtime_error with a
// message naming the offending field; round trip is exact.
Instance load_instance(const std::string& text);
std::string save_instance(const Instance& inst);
Instance load_instance_file(const std::string& path);

}  // namespace copoprice
