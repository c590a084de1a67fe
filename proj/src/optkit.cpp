#include "copoprice/optkit.hpp"

#include <cstdio>
#include <cstdlib>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace copoprice {

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

double Matrix::max_abs() const {
  double v = 0.0;
  for (double x : a) v = std::max(v, std::fabs(x));
  return v;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Nearest power of two to 1/v: exact to scale by, adds no rounding.
double pow2_scale(double v) {
  if (v <= 0.0 || !std::isfinite(v)) return 1.0;
  int e;
  std::frexp(v, &e);
  return std::ldexp(1.0, -e + 1);
}

// Dense two-phase simplex on  min c'w, T w = b (b >= 0), w >= 0, with one
// artificial per row. The tableau is periodically refactorized from the
// original data to shed accumulated drift, and the objective row is
// rebuilt exactly for the current basis at every refactor. Dantzig
// pricing with a pivot-quality veto; long degenerate plateaus flip the
// chunk into Bland's anti-cycling rule.
struct Tableau {
  int m, n;               // rows, structural columns
  std::vector<double> t;  // (m+1) x (n + m + 1); last row = reduced costs
  std::vector<double> orig;  // pristine copy of the row block
  std::vector<int> basis;
  int cols;
  long pivots = 0;

  enum class Chunk { Optimal, Unbounded, Refactor, Stalled };

  Tableau(int m_, int n_) : m(m_), n(n_), cols(n_ + m_ + 1) {
    t.assign(static_cast<size_t>(m + 1) * cols, 0.0);
    basis.resize(m);
  }

  double* row(int r) { return &t[static_cast<size_t>(r) * cols]; }
  int art(int r) const { return n + r; }
  int rhs() const { return cols - 1; }

  void snapshot() { orig.assign(t.begin(), t.begin() + static_cast<size_t>(m) * cols); }

  void pivot(int pr, int pc) {
    double* prow = row(pr);
    const double inv = 1.0 / prow[pc];
    for (int k = 0; k < cols; ++k) prow[k] *= inv;
    prow[pc] = 1.0;
    for (int r = 0; r <= m; ++r) {
      if (r == pr) continue;
      double* rr = row(r);
      const double f = rr[pc];
      if (f == 0.0) continue;
      for (int k = 0; k < cols; ++k) rr[k] -= f * prow[k];
      rr[pc] = 0.0;
    }
    basis[pr] = pc;
    ++pivots;
  }

  // Gauss-Jordan from the pristine rows to the current basis set. The
  // row-to-column pairing is rebuilt greedily on the strongest element;
  // only the column set matters. False when the basis has gone singular.
  bool refactor() {
    std::vector<int> cols_pending;
    std::vector<int> rows_pending;
    for (int r = 0; r < m; ++r)
      if (basis[r] != art(r)) {
        cols_pending.push_back(basis[r]);
        rows_pending.push_back(r);
      }
    std::copy(orig.begin(), orig.end(), t.begin());
    for (int r = 0; r < m; ++r) basis[r] = art(r);
    while (!cols_pending.empty()) {
      double best = 0.0;
      size_t br = 0, bc = 0;
      for (size_t ri = 0; ri < rows_pending.size(); ++ri)
        for (size_t ci = 0; ci < cols_pending.size(); ++ci) {
          const double a = std::fabs(row(rows_pending[ri])[cols_pending[ci]]);
          if (a > best) {
            best = a;
            br = ri;
            bc = ci;
          }
        }
      if (best < 1e-11) return false;
      pivot(rows_pending[br], cols_pending[bc]);
      rows_pending.erase(rows_pending.begin() + br);
      cols_pending.erase(cols_pending.begin() + bc);
    }
    return true;
  }

  // Exact reduced costs for the current basis. Phase 1 prices artificial
  // columns at one, phase 2 uses c (artificials priced at zero).
  void rebuild_objective(bool phase1, const std::vector<double>& c) {
    double* obj = row(m);
    std::fill(obj, obj + cols, 0.0);
    if (!phase1)
      for (int k = 0; k < n; ++k) obj[k] = c[k];
    for (int r = 0; r < m; ++r) {
      const int bk = basis[r];
      const double cb = phase1 ? (bk >= n ? 1.0 : 0.0) : (bk < n ? c[bk] : 0.0);
      if (cb == 0.0) continue;
      const double* rr = row(r);
      for (int k = 0; k < cols; ++k) obj[k] -= cb * rr[k];
    }
    if (phase1)
      for (int r = 0; r < m; ++r) obj[art(r)] += 1.0;
  }

  // Minimum ratio over every positive coefficient; among rows attaining
  // it take the largest pivot (lowest basic index under Bland).
  int ratio_row(int pc, double tol, bool bland) {
    double best = kInf;
    for (int r = 0; r < m; ++r) {
      const double a = row(r)[pc];
      if (a > tol) best = std::min(best, std::max(0.0, row(r)[rhs()]) / a);
    }
    if (best == kInf) return -1;
    const double lim = best + 1e-9 * (1.0 + best);
    int pr = -1;
    double mag = 0.0;
    for (int r = 0; r < m; ++r) {
      const double a = row(r)[pc];
      if (a <= tol) continue;
      if (std::max(0.0, row(r)[rhs()]) / a > lim) continue;
      if (bland) {
        if (pr < 0 || basis[r] < basis[pr]) pr = r;
      } else if (a > mag) {
        mag = a;
        pr = r;
      }
    }
    return pr;
  }

  Chunk run_chunk(double tol, long max_pivots, bool bland, bool fresh) {
    double* obj = row(m);
    long done = 0;
    long plateau = 0;
    const long plateau_cap = m + n + 100;
    double last_obj = obj[rhs()];
    std::vector<int> vetoed;
    while (true) {
      if (done >= max_pivots) return Chunk::Refactor;

      int pc = -1;
      if (bland || plateau > plateau_cap) {
        for (int j = 0; j < n; ++j)
          if (obj[j] < -tol) {
            pc = j;
            break;  // lowest index
          }
        if (pc < 0) return Chunk::Optimal;
        const int pr = ratio_row(pc, tol, true);
        if (pr < 0) return Chunk::Unbounded;
        pivot(pr, pc);
      } else {
        // Dantzig with a veto on numerically poor pivot elements.
        bool pivoted = false;
        std::pair<int, int> fallback{-1, -1};
        vetoed.clear();
        for (int tries = 0; tries < 16 && !pivoted; ++tries) {
          double best = -tol;
          pc = -1;
          for (int j = 0; j < n; ++j) {
            if (obj[j] >= best) continue;
            bool skip = false;
            for (int s : vetoed) skip = skip || s == j;
            if (!skip) {
              best = obj[j];
              pc = j;
            }
          }
          if (pc < 0) break;
          const int pr = ratio_row(pc, tol, false);
          if (pr < 0) return Chunk::Unbounded;
          if (std::fabs(row(pr)[pc]) >= 1e-7) {
            pivot(pr, pc);
            pivoted = true;
          } else {
            if (fallback.first < 0) fallback = {pr, pc};
            vetoed.push_back(pc);
          }
        }
        if (!pivoted) {
          if (vetoed.empty()) return Chunk::Optimal;
          if (fallback.first < 0) return Chunk::Refactor;
          // A tiny pivot is a last resort, taken only on fresh data.
          if (!fresh) return Chunk::Refactor;
          pivot(fallback.first, fallback.second);
        }
      }
      ++done;

      if (done % 16 == 0) {
        double big = 0.0;
        for (double v : t) big = std::max(big, std::fabs(v));
        if (big > 1e9 || !std::isfinite(big)) return Chunk::Refactor;
      }
      const double cur = obj[rhs()];
      plateau = (cur > last_obj + 1e-12) ? 0 : plateau + 1;
      last_obj = cur;
    }
  }

  // One full phase with refactor rounds. Optimality and unboundedness
  // are only reported after they survive a fresh factorization with
  // exactly rebuilt reduced costs.
  LpStatus run(double tol, const std::vector<double>& c, bool phase1) {
    rebuild_objective(phase1, c);
    bool bland = false;
    bool fresh = true;
    for (int round = 0; round < 200; ++round) {
      const Chunk st = run_chunk(tol, 2000, bland, fresh);
      if (std::getenv("LP_TRACE"))
        std::fprintf(stderr, "phase%d round=%d chunk=%d pivots=%ld obj=%.9g bland=%d\n",
                     phase1 ? 1 : 2, round, (int)st, pivots, -row(m)[rhs()], (int)bland);
      if (st == Chunk::Stalled) return LpStatus::Stalled;
      if (!refactor()) return LpStatus::Stalled;
      rebuild_objective(phase1, c);
      fresh = true;
      if (st == Chunk::Optimal || st == Chunk::Unbounded) {
        double* obj = row(m);
        bool improving = false;
        bool ray = false;
        for (int j = 0; j < n; ++j) {
          if (obj[j] >= -10.0 * tol) continue;
          improving = true;
          bool has_pos = false;
          for (int r = 0; r < m && !has_pos; ++r) has_pos = row(r)[j] > tol;
          if (!has_pos) ray = true;
        }
        if (ray) return LpStatus::Unbounded;
        if (!improving) return LpStatus::Optimal;
        bland = bland || st == Chunk::Optimal;  // drift surfaced: play safe
        continue;
      }
      if (round >= 100) bland = true;  // persistent degeneracy
    }
    return LpStatus::Stalled;
  }

  // Pivot basic artificials onto real columns where possible; rows with
  // no usable coefficient are redundant and stay inert at zero.
  void expel_artificials(double tol) {
    for (int r = 0; r < m; ++r) {
      if (basis[r] < n) continue;
      double best = 0.0;
      int pc = -1;
      for (int j = 0; j < n; ++j) {
        const double a = std::fabs(row(r)[j]);
        if (a > best) {
          best = a;
          pc = j;
        }
      }
      if (pc >= 0 && best > std::max(tol, 1e-7)) pivot(r, pc);
    }
  }
};

}  // namespace

LpSolution solve_lp(const DenseLp& lp, double tol) {
  const int m0 = lp.A.rows;
  const int n0 = lp.A.cols;
  if (static_cast<int>(lp.b.size()) != m0 || static_cast<int>(lp.c.size()) != n0)
    throw std::invalid_argument("solve_lp: inconsistent dimensions");
  if (!lp.lower.empty() && static_cast<int>(lp.lower.size()) != n0)
    throw std::invalid_argument("solve_lp: bad lower bound vector");
  if (!lp.upper.empty() && static_cast<int>(lp.upper.size()) != n0)
    throw std::invalid_argument("solve_lp: bad upper bound vector");

  // Standard form: shift lower bounds to zero, upper bounds become rows.
  std::vector<double> lo(n0, 0.0);
  if (!lp.lower.empty()) lo = lp.lower;
  std::vector<int> up_var;
  if (!lp.upper.empty())
    for (int k = 0; k < n0; ++k)
      if (lp.upper[k].has_value()) up_var.push_back(k);
  const int n_up = static_cast<int>(up_var.size());
  const int m = m0 + n_up;
  const int n = n0 + n_up;

  Matrix A(m, n);
  std::vector<double> b(m, 0.0), c(n, 0.0);
  double shift_obj = 0.0;
  for (int k = 0; k < n0; ++k) {
    c[k] = lp.c[k];
    shift_obj += lp.c[k] * lo[k];
  }
  for (int r = 0; r < m0; ++r) {
    double rb = lp.b[r];
    for (int k = 0; k < n0; ++k) {
      A(r, k) = lp.A(r, k);
      rb -= lp.A(r, k) * lo[k];
    }
    b[r] = rb;
  }
  for (int u = 0; u < n_up; ++u) {
    const int r = m0 + u;
    const int k = up_var[u];
    A(r, k) = 1.0;
    A(r, n0 + u) = 1.0;
    b[r] = *lp.upper[k] - lo[k];
    if (b[r] < -tol) return {LpStatus::Infeasible, {}, {}, 0.0};  // ub < lb
  }

  // Power-of-two equilibration of rows then columns.
  std::vector<double> rscale(m, 1.0), cscale(n, 1.0);
  for (int r = 0; r < m; ++r) {
    double mx = std::fabs(b[r]);
    for (int k = 0; k < n; ++k) mx = std::max(mx, std::fabs(A(r, k)));
    rscale[r] = pow2_scale(mx);
    for (int k = 0; k < n; ++k) A(r, k) *= rscale[r];
    b[r] *= rscale[r];
  }
  for (int k = 0; k < n; ++k) {
    double mx = 0.0;
    for (int r = 0; r < m; ++r) mx = std::max(mx, std::fabs(A(r, k)));
    cscale[k] = pow2_scale(mx);
    for (int r = 0; r < m; ++r) A(r, k) *= cscale[k];
  }
  double cmax = 0.0;
  for (int k = 0; k < n; ++k) {
    c[k] *= cscale[k];
    cmax = std::max(cmax, std::fabs(c[k]));
  }
  const double ob_scale = pow2_scale(cmax);
  for (int k = 0; k < n; ++k) c[k] *= ob_scale;

  Tableau tab(m, n);
  double bmax = 0.0;
  for (int r = 0; r < m; ++r) {
    if (b[r] < 0.0) {
      rscale[r] = -rscale[r];
      b[r] = -b[r];
      for (int k = 0; k < n; ++k) A(r, k) = -A(r, k);
    }
    for (int k = 0; k < n; ++k) tab.row(r)[k] = A(r, k);
    tab.row(r)[tab.art(r)] = 1.0;
    tab.row(r)[tab.rhs()] = b[r];
    tab.basis[r] = tab.art(r);
    bmax = std::max(bmax, b[r]);
  }
  tab.snapshot();

  // Phase 1: minimize the sum of artificials.
  LpStatus st = tab.run(tol, c, true);
  if (st != LpStatus::Optimal) return {LpStatus::Stalled, {}, {}, 0.0};
  const double infeas = -tab.row(tab.m)[tab.rhs()];
  if (infeas > 1e-7 * (1.0 + bmax)) return {LpStatus::Infeasible, {}, {}, 0.0};
  tab.expel_artificials(tol);

  // Phase 2: the real objective.
  st = tab.run(tol, c, false);
  if (st != LpStatus::Optimal) return {st, {}, {}, 0.0};

  LpSolution sol;
  sol.status = LpStatus::Optimal;
  sol.u.assign(n0, 0.0);
  std::vector<double> w(n, 0.0);
  for (int r = 0; r < m; ++r)
    if (tab.basis[r] < n) w[tab.basis[r]] = tab.row(r)[tab.rhs()];
  for (int k = 0; k < n0; ++k) sol.u[k] = w[k] * cscale[k] + lo[k];

  sol.objective = shift_obj;
  for (int k = 0; k < n0; ++k) sol.objective += lp.c[k] * (sol.u[k] - lo[k]);

  // Duals: the reduced cost of artificial column r is -y_r (scaled).
  sol.y.assign(m0, 0.0);
  for (int r = 0; r < m0; ++r)
    sol.y[r] = -tab.row(tab.m)[tab.art(r)] * rscale[r] / ob_scale;
  return sol;
}

EigResult sym_eig(const Matrix& M, double sym_tol) {
  const int n = M.rows;
  if (M.cols != n) throw std::invalid_argument("sym_eig: matrix must be square");
  double scale = std::max(1.0, M.max_abs());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::fabs(M(i, j) - M(j, i)) > sym_tol * scale)
        throw std::invalid_argument("sym_eig: matrix is not symmetric");

  Matrix A = M;
  // Symmetrize exactly so rotations stay consistent.
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double v = 0.5 * (A(i, j) + A(j, i));
      A(i, j) = v;
      A(j, i) = v;
    }
  Matrix V = Matrix::identity(n);

  double fro = 0.0;
  for (double x : A.a) fro += x * x;
  fro = std::sqrt(fro);
  const double thresh = 1e-12 * (1.0 + fro);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += 2.0 * A(p, q) * A(p, q);
    off = std::sqrt(off);
    if (off <= thresh) break;

    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = A(p, q);
        if (std::fabs(apq) <= thresh / (n * n + 1.0)) continue;
        const double app = A(p, p), aqq = A(q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        double t;
        if (std::fabs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = 1.0 / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
          if (theta < 0.0) t = -t;
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        A(p, p) = app - t * apq;
        A(q, q) = aqq + t * apq;
        A(p, q) = 0.0;
        A(q, p) = 0.0;
        for (int k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = A(k, p), akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(p, k) = A(k, p);
          A(k, q) = s * akp + c * akq;
          A(q, k) = A(k, q);
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = V(k, p), vkq = V(k, q);
          V(k, p) = c * vkp - s * vkq;
          V(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  EigResult res;
  res.w.resize(n);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return A(a, a) < A(b, b); });
  res.V = Matrix(n, n);
  for (int k = 0; k < n; ++k) {
    res.w[k] = A(order[k], order[k]);
    for (int r = 0; r < n; ++r) res.V(r, k) = V(r, order[k]);
  }
  return res;
}

Matrix project_psd(const Matrix& M) {
  const int n = M.rows;
  EigResult e = sym_eig(M);
  Matrix P(n, n);
  for (int k = 0; k < n; ++k) {
    const double w = e.w[k];
    if (w <= 0.0) continue;
    for (int i = 0; i < n; ++i) {
      const double wi = w * e.V(i, k);
      for (int j = i; j < n; ++j) P(i, j) += wi * e.V(j, k);
    }
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) P(j, i) = P(i, j);
  return P;
}

LpRelaxation solve_lp_relaxation(const Instance& inst) {
  inst.validate();
  const int I = inst.num_evs(), J = inst.num_evses(), T = inst.T;
  const int nx = I * J, np = J * T;
  // Variables: x, p, then slacks for energy / occupancy / capacity / uniqueness.
  const int n = nx + np + nx + np + np + I;
  const int m = nx + np + np + I;

  DenseLp lp;
  lp.A = Matrix(m, n);
  lp.b.assign(m, 0.0);
  lp.c.assign(n, 0.0);
  lp.upper.assign(n, std::nullopt);

  auto X = [&](int i, int j) { return i * J + j; };
  auto P = [&](int j, int t) { return nx + j * T + t; };
  int sE = nx + np, sO = sE + nx, sC = sO + np, sU = sC + np;

  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j) lp.c[X(i, j)] = -inst.evs[i].v;
  for (int j = 0; j < J; ++j)
    for (int t = 0; t < T; ++t) lp.c[P(j, t)] = inst.grid_price[t];
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j) lp.upper[X(i, j)] = 1.0;

  int r = 0;
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j, ++r) {
      for (int t = 0; t < T; ++t)
        if (availability(inst, i + 1, t + 1)) lp.A(r, P(j, t)) = 1.0;
      lp.A(r, X(i, j)) = -inst.evs[i].e;
      lp.A(r, sE + i * J + j) = -1.0;
    }
  const int occ0 = r;
  for (int j = 0; j < J; ++j)
    for (int t = 0; t < T; ++t, ++r) {
      for (int i = 0; i < I; ++i)
        if (availability(inst, i + 1, t + 1)) lp.A(r, X(i, j)) = 1.0;
      lp.A(r, sO + j * T + t) = 1.0;
      lp.b[r] = 1.0;
    }
  const int cap0 = r;
  for (int j = 0; j < J; ++j)
    for (int t = 0; t < T; ++t, ++r) {
      lp.A(r, P(j, t)) = 1.0;
      lp.A(r, sC + j * T + t) = 1.0;
      lp.b[r] = inst.evses[j].capacity[t];
    }
  for (int i = 0; i < I; ++i, ++r) {
    for (int j = 0; j < J; ++j) lp.A(r, X(i, j)) = 1.0;
    lp.A(r, sU + i) = 1.0;
    lp.b[r] = 1.0;
  }

  LpSolution sol = solve_lp(lp);
  LpRelaxation rel;
  rel.status = sol.status;
  if (sol.status != LpStatus::Optimal) return rel;

  rel.x = Matrix(I, J);
  rel.p = Matrix(J, T);
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j) rel.x(i, j) = sol.u[X(i, j)];
  for (int j = 0; j < J; ++j)
    for (int t = 0; t < T; ++t) rel.p(j, t) = sol.u[P(j, t)];
  rel.objective = -sol.objective;

  rel.mu_occupancy = Matrix(J, T);
  rel.mu_capacity = Matrix(J, T);
  for (int j = 0; j < J; ++j)
    for (int t = 0; t < T; ++t) {
      double mo = -sol.y[occ0 + j * T + t];
      double mc = -sol.y[cap0 + j * T + t];
      if (mo < 0.0 && mo > -1e-7) mo = 0.0;
      if (mc < 0.0 && mc > -1e-7) mc = 0.0;
      rel.mu_occupancy(j, t) = mo;
      rel.mu_capacity(j, t) = mc;
    }
  return rel;
}

}  // namespace copoprice
