#include "copoprice/pricing.hpp"

#include <cmath>
#include <stdexcept>

namespace copoprice {

const char* mechanism_name(Mechanism m) {
  switch (m) {
    case Mechanism::CMP: return "cmp";
    case Mechanism::CMP_R: return "cmp-r";
    case Mechanism::CMP_RS: return "cmp-rs";
    case Mechanism::TOU: return "tou";
    case Mechanism::CRP: return "crp";
  }
  return "?";
}

Mechanism mechanism_from_name(const std::string& s) {
  if (s == "cmp") return Mechanism::CMP;
  if (s == "cmp-r" || s == "cmpr") return Mechanism::CMP_R;
  if (s == "cmp-rs" || s == "cmprs") return Mechanism::CMP_RS;
  if (s == "tou") return Mechanism::TOU;
  if (s == "crp") return Mechanism::CRP;
  throw std::invalid_argument("unknown mechanism \"" + s + "\"");
}

namespace {

void check_choice(const Instance& inst, int i, const std::vector<double>& x_i) {
  if (i < 0 || i >= inst.num_evs()) throw std::invalid_argument("price: bad user index");
  if (static_cast<int>(x_i.size()) != inst.num_evses())
    throw std::invalid_argument("price: choice vector has wrong length");
  double sum = 0.0;
  for (double v : x_i) {
    if (v != 0.0 && v != 1.0) throw std::invalid_argument("price: choice must be binary");
    sum += v;
  }
  if (sum > 1.5) throw std::invalid_argument("price: choice selects more than one EVSE");
}

}  // namespace

double rho_ls_e(const Instance& inst, const Assignment& a, int i,
                const std::vector<double>& x_i) {
  check_choice(inst, i, x_i);
  double s = 0.0;
  for (int j = 0; j < inst.num_evses(); ++j) {
    if (x_i[j] == 0.0) continue;
    for (int t = 0; t < inst.T; ++t)
      if (availability(inst, i + 1, t + 1)) s += inst.grid_price[t] * a.p(j, t);
  }
  return s;
}

double rho_ls_i(const Instance& inst, const Assignment& a, const DualSolution& d,
                int i, const std::vector<double>& x_i) {
  check_choice(inst, i, x_i);
  if (!d.has_capacity_family())
    throw std::invalid_argument("rho_ls_i: duals carry no capacity family");
  const int T = inst.T;
  double s = 0.0;
  for (int j = 0; j < inst.num_evses(); ++j) {
    if (x_i[j] == 0.0) continue;
    for (int t = 0; t < T; ++t) {
      if (!availability(inst, i + 1, t + 1)) continue;
      const int k = j * T + t;
      s += (d.lam3[k] + inst.evses[j].capacity[t] * d.Lam3[k]) * a.p(j, t);
    }
  }
  return s;
}

double rho_c(const Instance& inst, const DualSolution& d, int i,
             const std::vector<double>& x_i, const Matrix& x_minus,
             const Matrix& psi_star) {
  check_choice(inst, i, x_i);
  const int T = inst.T;
  double s = 0.0;
  for (int j = 0; j < inst.num_evses(); ++j) {
    if (x_i[j] == 0.0) continue;
    for (int t = 0; t < T; ++t) {
      if (!availability(inst, i + 1, t + 1)) continue;
      const int k = j * T + t;
      double others = 0.0;
      for (int l = 0; l < inst.num_evs(); ++l)
        if (l != i && availability(inst, l + 1, t + 1)) others += x_minus(l, j);
      s += d.lam2[k] + d.Lam2[k] * (1.0 + 2.0 * others + 2.0 * psi_star(j, t));
    }
  }
  return s;
}

PriceRow price(const Instance& inst, const Assignment& a, const DualSolution* duals,
               Mechanism mech, int i, const std::vector<double>& x_i) {
  check_choice(inst, i, x_i);
  auto need_source = [&](DualSource want) {
    if (!duals || duals->source != want)
      throw std::invalid_argument(std::string("price: mechanism ") + mechanism_name(mech) +
                                  " called with an inconsistent dual source");
  };
  switch (mech) {
    case Mechanism::TOU:
      if (duals) throw std::invalid_argument("price: tou takes no duals");
      break;
    case Mechanism::CMP: need_source(DualSource::CuttingPlaneFull); break;
    case Mechanism::CMP_R: need_source(DualSource::CuttingPlaneReduced); break;
    case Mechanism::CMP_RS: need_source(DualSource::SdpInnerReduced); break;
    case Mechanism::CRP: need_source(DualSource::LpRelaxation); break;
  }

  PriceRow row;
  row.user = i;
  row.mechanism = mech;
  row.ls_e = rho_ls_e(inst, a, i, x_i);
  switch (mech) {
    case Mechanism::TOU:
      row.certified = true;
      break;
    case Mechanism::CMP:
    case Mechanism::CRP:
      row.ls_i = rho_ls_i(inst, a, *duals, i, x_i);
      row.congestion = rho_c(inst, *duals, i, x_i, a.x, a.psi);
      row.certified = mech == Mechanism::CRP || duals->status != CertStatus::Uncertified;
      break;
    case Mechanism::CMP_R:
    case Mechanism::CMP_RS:
      row.congestion = rho_c(inst, *duals, i, x_i, a.x, a.psi);
      row.certified = duals->status != CertStatus::Uncertified;
      break;
  }
  row.total = row.ls_e + row.ls_i + row.congestion;
  return row;
}

std::vector<PriceRow> price_at_optimum(const Instance& inst, const Assignment& a,
                                       const DualSolution* duals, Mechanism mech) {
  std::vector<PriceRow> rows;
  rows.reserve(inst.num_evs());
  for (int i = 0; i < inst.num_evs(); ++i) {
    std::vector<double> x_i(inst.num_evses(), 0.0);
    for (int j = 0; j < inst.num_evses(); ++j) x_i[j] = a.x(i, j) > 0.5 ? 1.0 : 0.0;
    rows.push_back(price(inst, a, duals, mech, i, x_i));
  }
  return rows;
}

DualSolution duals_from_relaxation(const Instance& inst, const Matrix& mu_occupancy,
                                   const Matrix& mu_capacity) {
  const int I = inst.num_evs(), J = inst.num_evses(), T = inst.T;
  DualSolution d;
  d.lam1.assign(static_cast<size_t>(I) * J, 0.0);
  d.lam2.resize(static_cast<size_t>(J) * T);
  d.lam3.resize(static_cast<size_t>(J) * T);
  d.lam4.assign(I, 0.0);
  d.Lam1.assign(static_cast<size_t>(I) * J, 0.0);
  d.Lam2.assign(static_cast<size_t>(J) * T, 0.0);
  d.Lam3.assign(static_cast<size_t>(J) * T, 0.0);
  d.Lam4.assign(I, 0.0);
  d.delta.assign(static_cast<size_t>(I) * J, 0.0);
  for (int j = 0; j < J; ++j)
    for (int t = 0; t < T; ++t) {
      d.lam2[j * T + t] = mu_occupancy(j, t);
      d.lam3[j * T + t] = mu_capacity(j, t);
    }
  d.source = DualSource::LpRelaxation;
  d.status = CertStatus::Uncertified;
  return d;
}

}  // namespace copoprice
