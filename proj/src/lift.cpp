#include "copoprice/lift.hpp"

#include <cmath>
#include <stdexcept>

namespace copoprice {

int CopData::num_multipliers() const {
  int m = 0;
  for (int f = 0; f < 4; ++f) m += 2 * family_size(f);
  return m + static_cast<int>(x_pos.size());
}

std::array<std::vector<Constraint>, 4> build_h_vectors(const StandardForm& sf) {
  std::array<std::vector<Constraint>, 4> fam;
  for (const Constraint& c : sf.constraints)
    fam[static_cast<int>(c.family)].push_back(c);
  return fam;
}

CopData build_cop_data(const StandardForm& sf, const Instance& inst) {
  const VarIndex& ix = sf.index;
  CopData cd;
  cd.N = ix.N;
  cd.n = ix.N + 1;
  cd.I = ix.I;
  cd.J = ix.J;
  cd.T = ix.T;
  cd.q.assign(cd.N, 0.0);
  for (int i = 0; i < ix.I; ++i)
    for (int j = 0; j < ix.J; ++j) cd.q[ix.x(i, j)] = -inst.evs[i].v;
  for (int j = 0; j < ix.J; ++j)
    for (int t = 0; t < ix.T; ++t) cd.q[ix.p(j, t)] = inst.grid_price[t];
  cd.fam = build_h_vectors(sf);
  cd.x_pos.resize(static_cast<size_t>(ix.I) * ix.J);
  for (int i = 0; i < ix.I; ++i)
    for (int j = 0; j < ix.J; ++j) cd.x_pos[i * ix.J + j] = ix.x(i, j);
  return cd;
}

CopData build_reduced_cop_data(const Instance& inst, const Assignment& a) {
  const int I = inst.num_evs(), J = inst.num_evses(), T = inst.T;
  CopData cd;
  cd.reduced = true;
  cd.I = I;
  cd.J = J;
  cd.T = T;
  cd.N = 2 * I * J + J * T + I;
  cd.n = cd.N + 1;
  for (int j = 0; j < J; ++j)
    for (int t = 0; t < T; ++t) cd.frozen_cost += inst.grid_price[t] * a.p(j, t);

  // Layout: x (IJ, i-major), phi (IJ), psi (JT, j-major), xi (I).
  const int x0 = 0, phi0 = I * J, psi0 = 2 * I * J, xi0 = 2 * I * J + J * T;
  auto X = [&](int i, int j) { return x0 + i * J + j; };

  cd.q.assign(cd.N, 0.0);
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j) cd.q[X(i, j)] = -inst.evs[i].v;

  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j) {
      Constraint c;
      c.family = ConFamily::Energy;
      c.i = i;
      c.j = j;
      double posted = 0.0;  // power already scheduled inside i's window
      for (int t = 0; t < T; ++t)
        if (availability(inst, i + 1, t + 1)) posted += a.p(j, t);
      c.h.emplace_back(X(i, j), -inst.evs[i].e);
      c.h.emplace_back(phi0 + i * J + j, -1.0);
      c.rhs = -posted;
      cd.fam[0].push_back(std::move(c));
    }
  for (int j = 0; j < J; ++j)
    for (int t = 0; t < T; ++t) {
      Constraint c;
      c.family = ConFamily::Occupancy;
      c.j = j;
      c.t = t;
      for (int i = 0; i < I; ++i)
        if (availability(inst, i + 1, t + 1)) c.h.emplace_back(X(i, j), 1.0);
      c.h.emplace_back(psi0 + j * T + t, 1.0);
      c.rhs = 1.0;
      cd.fam[1].push_back(std::move(c));
    }
  for (int i = 0; i < I; ++i) {
    Constraint c;
    c.family = ConFamily::Uniqueness;
    c.i = i;
    for (int j = 0; j < J; ++j) c.h.emplace_back(X(i, j), 1.0);
    c.h.emplace_back(xi0 + i, 1.0);
    c.rhs = 1.0;
    cd.fam[3].push_back(std::move(c));
  }

  cd.x_pos.resize(static_cast<size_t>(I) * J);
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j) cd.x_pos[i * J + j] = X(i, j);
  return cd;
}

std::vector<double> lifted_z_star(const CopData& cd, const Instance& inst,
                                  const Assignment& a) {
  const int I = cd.I, J = cd.J, T = cd.T;
  std::vector<double> z(cd.N, 0.0);
  if (!cd.reduced) {
    const VarIndex ix = VarIndex::make(I, J, T);
    for (int i = 0; i < I; ++i)
      for (int j = 0; j < J; ++j) {
        z[ix.x(i, j)] = a.x(i, j);
        z[ix.phi(i, j)] = a.phi(i, j);
      }
    for (int j = 0; j < J; ++j)
      for (int t = 0; t < T; ++t) {
        z[ix.p(j, t)] = a.p(j, t);
        z[ix.psi(j, t)] = a.psi(j, t);
        z[ix.zeta(j, t)] = a.zeta(j, t);
      }
    for (int i = 0; i < I; ++i) z[ix.xi(i)] = a.xi[i];
  } else {
    const int phi0 = I * J, psi0 = 2 * I * J, xi0 = 2 * I * J + J * T;
    for (int i = 0; i < I; ++i)
      for (int j = 0; j < J; ++j) {
        z[i * J + j] = a.x(i, j);
        z[phi0 + i * J + j] = a.phi(i, j);
      }
    for (int j = 0; j < J; ++j)
      for (int t = 0; t < T; ++t) z[psi0 + j * T + t] = a.psi(j, t);
    for (int i = 0; i < I; ++i) z[xi0 + i] = a.xi[i];
  }
  (void)inst;
  return z;
}

namespace {

void check_family(const char* what, size_t got, size_t want) {
  if (got != want)
    throw std::invalid_argument(std::string("omega_from_duals: bad size for ") + what);
}

}  // namespace

Matrix omega_from_duals(const CopData& cd, const DualSolution& d) {
  check_family("lam1", d.lam1.size(), cd.fam[0].size());
  check_family("lam2", d.lam2.size(), cd.fam[1].size());
  check_family("lam3", d.lam3.size(), cd.fam[2].size());
  check_family("lam4", d.lam4.size(), cd.fam[3].size());
  check_family("Lam1", d.Lam1.size(), cd.fam[0].size());
  check_family("Lam2", d.Lam2.size(), cd.fam[1].size());
  check_family("Lam3", d.Lam3.size(), cd.fam[2].size());
  check_family("Lam4", d.Lam4.size(), cd.fam[3].size());
  check_family("delta", d.delta.size(), cd.x_pos.size());

  const int n = cd.n;
  Matrix W(n, n);
  for (int k = 0; k < cd.N; ++k) {
    W(0, k + 1) += 0.5 * cd.q[k];
    W(k + 1, 0) += 0.5 * cd.q[k];
  }
  const std::vector<double>* lams[4] = {&d.lam1, &d.lam2, &d.lam3, &d.lam4};
  const std::vector<double>* Lams[4] = {&d.Lam1, &d.Lam2, &d.Lam3, &d.Lam4};
  for (int f = 0; f < 4; ++f) {
    for (size_t k = 0; k < cd.fam[f].size(); ++k) {
      const Constraint& c = cd.fam[f][k];
      const double lam = (*lams[f])[k];
      const double Lam = (*Lams[f])[k];
      if (lam != 0.0)
        for (const auto& [pos, coef] : c.h) {
          W(0, pos + 1) += 0.5 * lam * coef;
          W(pos + 1, 0) += 0.5 * lam * coef;
        }
      if (Lam != 0.0)
        for (const auto& [pa, ca] : c.h)
          for (const auto& [pb, cb] : c.h) W(pa + 1, pb + 1) += Lam * ca * cb;
    }
  }
  for (size_t k = 0; k < cd.x_pos.size(); ++k) {
    const double del = d.delta[k];
    if (del == 0.0) continue;
    const int pos = cd.x_pos[k] + 1;
    W(0, pos) += 0.5 * del;
    W(pos, 0) += 0.5 * del;
    W(pos, pos) -= del;
  }
  return W;
}

double dual_objective(const CopData& cd, const DualSolution& d) {
  const std::vector<double>* lams[4] = {&d.lam1, &d.lam2, &d.lam3, &d.lam4};
  const std::vector<double>* Lams[4] = {&d.Lam1, &d.Lam2, &d.Lam3, &d.Lam4};
  double obj = 0.0;
  for (int f = 0; f < 4; ++f)
    for (size_t k = 0; k < cd.fam[f].size(); ++k) {
      const double b = cd.fam[f][k].rhs;
      obj += b * (*lams[f])[k] + b * b * (*Lams[f])[k];
    }
  return obj - cd.frozen_cost;
}

double cop_objective(const DualSolution& d, const Instance& inst) {
  const int J = inst.num_evses(), T = inst.T;
  if (!d.has_capacity_family())
    throw std::invalid_argument("cop_objective: capacity family absent (reduced duals)");
  double obj = 0.0;
  for (int j = 0; j < J; ++j)
    for (int t = 0; t < T; ++t) {
      const int k = j * T + t;
      const double G = inst.evses[j].capacity[t];
      obj += d.lam2[k] + d.Lam2[k] + G * d.lam3[k] + G * G * d.Lam3[k];
    }
  for (size_t i = 0; i < d.lam4.size(); ++i) obj += d.lam4[i] + d.Lam4[i];
  return obj;
}

std::vector<double> flatten_duals(const CopData& cd, const DualSolution& d) {
  std::vector<double> th;
  th.reserve(cd.num_multipliers());
  const std::vector<double>* parts[9] = {&d.lam1, &d.lam2, &d.lam3, &d.lam4,
                                         &d.Lam1, &d.Lam2, &d.Lam3, &d.Lam4, &d.delta};
  for (const auto* p : parts) th.insert(th.end(), p->begin(), p->end());
  return th;
}

DualSolution unflatten_duals(const CopData& cd, const std::vector<double>& theta) {
  DualSolution d;
  size_t off = 0;
  auto take = [&](std::vector<double>& dst, size_t len) {
    dst.assign(theta.begin() + off, theta.begin() + off + len);
    off += len;
  };
  take(d.lam1, cd.fam[0].size());
  take(d.lam2, cd.fam[1].size());
  take(d.lam3, cd.fam[2].size());
  take(d.lam4, cd.fam[3].size());
  take(d.Lam1, cd.fam[0].size());
  take(d.Lam2, cd.fam[1].size());
  take(d.Lam3, cd.fam[2].size());
  take(d.Lam4, cd.fam[3].size());
  take(d.delta, cd.x_pos.size());
  if (off != theta.size())
    throw std::invalid_argument("unflatten_duals: size mismatch");
  return d;
}

std::vector<bool> sign_constrained_mask(const CopData& cd) {
  std::vector<bool> mask;
  mask.reserve(cd.num_multipliers());
  for (int lvl = 0; lvl < 2; ++lvl)
    for (int f = 0; f < 4; ++f)
      mask.insert(mask.end(), cd.fam[f].size(), f != 0);  // families 2..4 only
  mask.insert(mask.end(), cd.x_pos.size(), false);  // delta free
  return mask;
}

}  // namespace copoprice
