#include "copoprice/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace copoprice {

namespace {

struct Ent {
  int r, c;  // r <= c, in the bordered (N+1) space
  double v;
};

// Sparse upper-triangle representation of every constraint matrix, in the
// flat multiplier order [lam fam0..3, Lam fam0..3, delta].
std::vector<std::vector<Ent>> build_matrices(const CopData& cd) {
  std::vector<std::vector<Ent>> A;
  A.reserve(cd.num_multipliers());
  for (int f = 0; f < 4; ++f)
    for (const Constraint& c : cd.fam[f]) {
      std::vector<Ent> m;
      m.reserve(c.h.size());
      for (const auto& [pos, coef] : c.h) m.push_back({0, pos + 1, 0.5 * coef});
      A.push_back(std::move(m));
    }
  for (int f = 0; f < 4; ++f)
    for (const Constraint& c : cd.fam[f]) {
      std::vector<Ent> m;
      for (size_t a = 0; a < c.h.size(); ++a)
        for (size_t b = a; b < c.h.size(); ++b)
          m.push_back({c.h[a].first + 1, c.h[b].first + 1,
                       c.h[a].second * c.h[b].second});
      A.push_back(std::move(m));
    }
  for (int xp : cd.x_pos) {
    std::vector<Ent> m;
    m.push_back({0, xp + 1, 0.5});
    m.push_back({xp + 1, xp + 1, -1.0});
    A.push_back(std::move(m));
  }
  return A;
}

double fro_inner(const std::vector<Ent>& m, const Matrix& D) {
  double s = 0.0;
  for (const Ent& e : m) s += e.v * D(e.r, e.c) * (e.r == e.c ? 1.0 : 2.0);
  return s;
}

// Dense LU with partial pivoting; factor once, solve many.
struct Lu {
  int n = 0;
  std::vector<double> a;
  std::vector<int> piv;

  void factor(std::vector<double> m, int dim) {
    n = dim;
    a = std::move(m);
    piv.resize(n);
    for (int k = 0; k < n; ++k) {
      int p = k;
      double best = std::fabs(a[static_cast<size_t>(k) * n + k]);
      for (int r = k + 1; r < n; ++r) {
        const double v = std::fabs(a[static_cast<size_t>(r) * n + k]);
        if (v > best) {
          best = v;
          p = r;
        }
      }
      if (best == 0.0) throw std::runtime_error("sdp: singular affine system");
      piv[k] = p;
      if (p != k)
        for (int c = 0; c < n; ++c)
          std::swap(a[static_cast<size_t>(k) * n + c], a[static_cast<size_t>(p) * n + c]);
      const double inv = 1.0 / a[static_cast<size_t>(k) * n + k];
      for (int r = k + 1; r < n; ++r) {
        double& l = a[static_cast<size_t>(r) * n + k];
        l *= inv;
        if (l == 0.0) continue;
        const double lv = l;
        const double* rowk = &a[static_cast<size_t>(k) * n];
        double* rowr = &a[static_cast<size_t>(r) * n];
        for (int c = k + 1; c < n; ++c) rowr[c] -= lv * rowk[c];
      }
    }
  }

  void solve(std::vector<double>& b) const {
    // Row interchanges first: L is stored with fully swapped rows.
    for (int k = 0; k < n; ++k)
      if (piv[k] != k) std::swap(b[k], b[piv[k]]);
    for (int k = 0; k < n; ++k) {
      const double bk = b[k];
      if (bk == 0.0) continue;
      for (int r = k + 1; r < n; ++r) b[r] -= a[static_cast<size_t>(r) * n + k] * bk;
    }
    for (int k = n - 1; k >= 0; --k) {
      double s = b[k];
      const double* rowk = &a[static_cast<size_t>(k) * n];
      for (int c = k + 1; c < n; ++c) s -= rowk[c] * b[c];
      b[k] = s / rowk[k];
    }
  }
};

Matrix qt_matrix(const CopData& cd) {
  Matrix Q(cd.n, cd.n);
  for (int k = 0; k < cd.N; ++k) {
    Q(0, k + 1) = 0.5 * cd.q[k];
    Q(k + 1, 0) = 0.5 * cd.q[k];
  }
  return Q;
}

Matrix assemble_omega(const std::vector<std::vector<Ent>>& A,
                      const std::vector<double>& theta, const Matrix& Qt) {
  Matrix W = Qt;
  for (size_t k = 0; k < A.size(); ++k) {
    const double th = theta[k];
    if (th == 0.0) continue;
    for (const Ent& e : A[k]) {
      W(e.r, e.c) += th * e.v;
      if (e.r != e.c) W(e.c, e.r) += th * e.v;
    }
  }
  return W;
}

}  // namespace

CopSolveResult solve_cop_sdp_inner(const CopData& cd, const Instance& inst,
                                   const std::vector<double>& z_star,
                                   double milp_obj, const SdpOptions& opts) {
  if (static_cast<int>(z_star.size()) != cd.N)
    throw std::invalid_argument("solve_cop_sdp_inner: z_star has wrong length");
  const int m = cd.num_multipliers();
  const int n = cd.n;
  const std::vector<std::vector<Ent>> A = build_matrices(cd);
  const Matrix Qt = qt_matrix(cd);
  const std::vector<bool> sign = sign_constrained_mask(cd);

  // Complementary-slackness row: sum_k Tr(A_k Y*) theta_k = -Tr(Qt Y*).
  std::vector<double> zl(n, 0.0);
  zl[0] = 1.0;
  for (int k = 0; k < cd.N; ++k) zl[k + 1] = z_star[k];
  std::vector<double> t(m);
  {
    Matrix Ystar(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) Ystar(r, c) = zl[r] * zl[c];
    for (int k = 0; k < m; ++k) t[k] = fro_inner(A[k], Ystar);
  }
  double r_compl = 0.0;
  for (int k = 0; k < cd.N; ++k) r_compl -= cd.q[k] * z_star[k];

  // Gram of the constraint matrices, bucketed by position.
  Matrix G(m, m);
  {
    std::unordered_map<long, std::vector<std::pair<int, double>>> bucket;
    for (int k = 0; k < m; ++k)
      for (const Ent& e : A[k])
        bucket[static_cast<long>(e.r) * n + e.c].push_back({k, e.v});
    for (const auto& [pos, list] : bucket) {
      const double w = (pos / n == pos % n) ? 1.0 : 2.0;
      for (const auto& [k1, v1] : list)
        for (const auto& [k2, v2] : list) G(k1, k2) += w * v1 * v2;
    }
  }

  // KKT of the affine projection: [[2I + G, -t], [t', 0]].
  Lu kkt;
  {
    std::vector<double> K(static_cast<size_t>(m + 1) * (m + 1), 0.0);
    for (int r = 0; r < m; ++r) {
      for (int c = 0; c < m; ++c) K[static_cast<size_t>(r) * (m + 1) + c] = G(r, c);
      K[static_cast<size_t>(r) * (m + 1) + r] += 2.0;
      K[static_cast<size_t>(r) * (m + 1) + m] = -t[r];
      K[static_cast<size_t>(m) * (m + 1) + r] = t[r];
    }
    kkt.factor(std::move(K), m + 1);
  }

  std::vector<double> th_w(m, 0.0), u_th(m, 0.0), th_v(m, 0.0);
  Matrix Pw(n, n), Mw(n, n), uP(n, n), uM(n, n);
  Matrix Pv, Mv;
  double penalty = opts.penalty;
  const double alpha = opts.over_relax;

  CopSolveResult res;
  std::vector<double> rhs(m + 1);
  Matrix C(n, n), D(n, n);
  double r_prim = 0.0, r_dual = 0.0;

  int it = 0;
  for (; it < opts.max_iters; ++it) {
    // Affine step: project (W - U) onto the equality set.
    for (size_t k = 0; k < C.a.size(); ++k) C.a[k] = (Pw.a[k] - uP.a[k]) + (Mw.a[k] - uM.a[k]);
    for (size_t k = 0; k < D.a.size(); ++k) D.a[k] = Qt.a[k] - C.a[k];
    for (int k = 0; k < m; ++k) rhs[k] = 2.0 * (th_w[k] - u_th[k]) - fro_inner(A[k], D);
    rhs[m] = r_compl;
    kkt.solve(rhs);
    th_v.assign(rhs.begin(), rhs.begin() + m);
    Matrix Om = assemble_omega(A, th_v, Qt);
    Pv = Matrix(n, n);
    Mv = Matrix(n, n);
    for (size_t k = 0; k < Om.a.size(); ++k) {
      const double half = 0.5 * (Om.a[k] - C.a[k]);
      Pv.a[k] = (Pw.a[k] - uP.a[k]) + half;
      Mv.a[k] = (Mw.a[k] - uM.a[k]) + half;
    }

    // Over-relaxed cone step with dual update.
    Matrix Pw_prev = Pw, Mw_prev = Mw;
    std::vector<double> th_w_prev = th_w;
    r_prim = 0.0;
    for (int k = 0; k < m; ++k) {
      const double hat = alpha * th_v[k] + (1.0 - alpha) * th_w[k];
      double w = hat + u_th[k];
      if (sign[k] && w < 0.0) w = 0.0;
      u_th[k] += hat - w;
      r_prim = std::max(r_prim, std::fabs(th_v[k] - w));
      th_w[k] = w;
    }
    Matrix Phat(n, n), Mhat(n, n);
    for (size_t k = 0; k < Phat.a.size(); ++k) {
      Phat.a[k] = alpha * Pv.a[k] + (1.0 - alpha) * Pw.a[k] + uP.a[k];
      Mhat.a[k] = alpha * Mv.a[k] + (1.0 - alpha) * Mw.a[k] + uM.a[k];
    }
    Pw = project_psd(Phat);
    for (size_t k = 0; k < Mhat.a.size(); ++k) Mw.a[k] = std::max(0.0, Mhat.a[k]);
    for (size_t k = 0; k < Phat.a.size(); ++k) {
      uP.a[k] = Phat.a[k] - Pw.a[k];
      uM.a[k] = Mhat.a[k] - Mw.a[k];
      r_prim = std::max({r_prim, std::fabs(Pv.a[k] - Pw.a[k]),
                         std::fabs(Mv.a[k] - Mw.a[k])});
    }
    r_dual = 0.0;
    for (int k = 0; k < m; ++k) r_dual = std::max(r_dual, std::fabs(th_w[k] - th_w_prev[k]));
    for (size_t k = 0; k < Pw.a.size(); ++k)
      r_dual = std::max({r_dual, std::fabs(Pw.a[k] - Pw_prev.a[k]),
                         std::fabs(Mw.a[k] - Mw_prev.a[k])});
    r_dual *= penalty;

    if ((it + 1) % 10 == 0 || r_prim < opts.eps_abs) {
      Matrix Ow = assemble_omega(A, th_w, Qt);
      double feas = 0.0;
      for (size_t k = 0; k < Ow.a.size(); ++k)
        feas = std::max(feas, std::fabs(Ow.a[k] - Pw.a[k] - Mw.a[k]));
      double cmpl = -r_compl;
      for (int k = 0; k < m; ++k) cmpl += t[k] * th_w[k];
      const double scale = 1.0 + Ow.max_abs();
      res.feas_residual = feas;
      if (feas <= (opts.eps_abs + opts.eps_rel) * scale &&
          std::fabs(cmpl) <= (opts.eps_abs + opts.eps_rel) * std::max(1.0, std::fabs(r_compl))) {
        res.converged = true;
        ++it;
        break;
      }
    }

    // Residual balancing perturbs the scaled dual state.
    if ((it + 1) % 25 == 0) {
      if (r_prim > 10.0 * r_dual && penalty < 1e6) {
        penalty *= 2.0;
        for (double& x : u_th) x *= 0.5;
        for (double& x : uP.a) x *= 0.5;
        for (double& x : uM.a) x *= 0.5;
      } else if (r_dual > 10.0 * r_prim && penalty > 1e-6) {
        penalty *= 0.5;
        for (double& x : u_th) x *= 2.0;
        for (double& x : uP.a) x *= 2.0;
        for (double& x : uM.a) x *= 2.0;
      }
    }
  }

  res.iterations = it;
  res.duals = unflatten_duals(cd, th_w);
  res.duals.source = cd.reduced ? DualSource::SdpInnerReduced : DualSource::SdpInnerFull;
  res.duals.objective = dual_objective(cd, res.duals);
  res.gap = std::fabs(res.duals.objective - milp_obj) / std::max(1.0, std::fabs(milp_obj));
  res.omega = Matrix(n, n);
  for (size_t k = 0; k < res.omega.a.size(); ++k) res.omega.a[k] = Pw.a[k] + Mw.a[k];
  if (res.converged) {
    res.duals.status = CertStatus::InnerApproxCertified;
    res.verdict.kind = CopositivityVerdict::Kind::Certified;  // P + M by construction
  } else {
    res.duals.status = CertStatus::Uncertified;
    res.verdict.kind = CopositivityVerdict::Kind::Inconclusive;
    res.verdict.value = -res.feas_residual;
  }
  (void)inst;
  return res;
}

}  // namespace copoprice
