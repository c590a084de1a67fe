#include <cstdio>
#include <cstdlib>
#include "copoprice/cop.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace copoprice {

bool CutPool::add(const std::vector<double>& v) {
  for (const auto& u : cuts) {
    if (u.size() != v.size()) continue;
    double d = 0.0;
    for (size_t k = 0; k < v.size(); ++k) d = std::max(d, std::fabs(u[k] - v[k]));
    if (d <= 1e-9) return false;
  }
  cuts.push_back(v);
  return true;
}

namespace {

double quad_form(const Matrix& M, const std::vector<double>& v) {
  const int n = M.rows;
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    if (v[i] == 0.0) continue;
    double row = 0.0;
    const double* mi = &M.a[static_cast<size_t>(i) * n];
    for (int j = 0; j < n; ++j) row += mi[j] * v[j];
    s += v[i] * row;
  }
  return s;
}

void normalize_l1(std::vector<double>& v) {
  double s = 0.0;
  for (double& x : v) {
    if (x < 0.0) x = 0.0;
    s += x;
  }
  if (s <= 0.0) return;
  for (double& x : v) x /= s;
}

struct Candidate {
  bool found = false;
  std::vector<double> v;
  double value = 0.0;
  void offer(const std::vector<double>& cand, double val) {
    if (!found || val < value - 1e-15) {
      found = true;
      v = cand;
      value = val;
    }
  }
};

// Exact minimum of v'Mv over every 2-point subsimplex.
void pair_scan(const Matrix& M, double tol_eff, Candidate& best) {
  const int n = M.rows;
  for (int k = 0; k < n; ++k)
    for (int l = k + 1; l < n; ++l) {
      const double A = M(k, k), C = M(l, l), B = M(k, l);
      double val = std::min(A, C);
      double alpha = A <= C ? 1.0 : 0.0;
      const double den = A - 2.0 * B + C;
      if (den > 0.0) {
        const double as = (C - B) / den;
        if (as > 0.0 && as < 1.0) {
          const double vi = as * as * A + 2.0 * as * (1.0 - as) * B +
                            (1.0 - as) * (1.0 - as) * C;
          if (vi < val) {
            val = vi;
            alpha = as;
          }
        }
      }
      if (val < -tol_eff && (!best.found || val < best.value)) {
        std::vector<double> v(n, 0.0);
        v[k] = alpha;
        v[l] = 1.0 - alpha;
        best.offer(v, val);
      }
    }
}

// Local minimization of v'Mv over the simplex by replicator dynamics on
// the shifted matrix gamma*11' - M (entrywise positive).
void replicator_search(const Matrix& M, double scale, double tol_eff, Candidate& best) {
  const int n = M.rows;
  const double gamma = scale + 1.0;

  std::vector<std::vector<double>> starts;
  starts.emplace_back(n, 1.0 / n);
  std::vector<std::pair<double, int>> rowmin(n);
  for (int i = 0; i < n; ++i) {
    double mn = M(i, 0);
    for (int j = 1; j < n; ++j) mn = std::min(mn, M(i, j));
    rowmin[i] = {mn, i};
  }
  std::sort(rowmin.begin(), rowmin.end());
  for (int s = 0; s < std::min(6, n); ++s) {
    std::vector<double> v(n, 0.2 / n);
    v[rowmin[s].second] += 0.8;
    starts.push_back(std::move(v));
  }
  {
    EigResult e = sym_eig(M);
    const int n0 = 0;
    std::vector<double> up(n, 0.0), um(n, 0.0);
    for (int i = 0; i < n; ++i) {
      const double x = e.V(i, n0);
      if (x > 0.0) up[i] = x;
      else um[i] = -x;
    }
    for (auto* u : {&up, &um}) {
      double s = 0.0;
      for (double x : *u) s += x;
      if (s <= 0.0) continue;
      std::vector<double> v(n);
      for (int i = 0; i < n; ++i) v[i] = 0.95 * (*u)[i] / s + 0.05 / n;
      std::vector<double> plain = *u;
      normalize_l1(plain);
      const double pv = quad_form(M, plain);
      if (pv < -tol_eff) best.offer(plain, pv);
      starts.push_back(std::move(v));
    }
  }

  std::vector<double> av(n);
  for (auto& v : starts) {
    normalize_l1(v);
    for (int it = 0; it < 500; ++it) {
      for (int i = 0; i < n; ++i) {
        const double* mi = &M.a[static_cast<size_t>(i) * n];
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += (gamma - mi[j]) * v[j];
        av[i] = s;
      }
      double denom = 0.0;
      for (int i = 0; i < n; ++i) denom += v[i] * av[i];
      if (denom <= 0.0) break;
      double delta = 0.0, sum = 0.0;
      for (int i = 0; i < n; ++i) {
        const double nv = v[i] * av[i] / denom;
        delta += std::fabs(nv - v[i]);
        v[i] = nv;
        sum += nv;
      }
      if (sum > 0.0 && std::fabs(sum - 1.0) > 1e-12)
        for (double& x : v) x /= sum;
      if (delta < 1e-13) break;
    }
    for (double& x : v)
      if (x < 1e-12) x = 0.0;
    normalize_l1(v);
    const double val = quad_form(M, v);
    if (val < -tol_eff) best.offer(v, val);
  }
}

// PSD + nonnegative membership by Dykstra alternating projections:
// find P psd with P <= M entrywise, so that M = P + (M - P), M - P >= 0.
bool psd_plus_n(const Matrix& M, double tol_eff, int iters) {
  const int n = M.rows;
  // Cheap sufficient test first: zero out positive off-diagonal entries
  // and check what remains for positive semidefiniteness.
  Matrix neg = M;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && neg(i, j) > 0.0) neg(i, j) = 0.0;
  {
    EigResult e = sym_eig(neg);
    if (e.w.front() >= -tol_eff) return true;
  }

  Matrix X = M, P(n, n), Q(n, n);
  for (int it = 0; it < iters; ++it) {
    Matrix Y(n, n);
    for (size_t k = 0; k < X.a.size(); ++k) Y.a[k] = X.a[k] + P.a[k];
    Matrix Ypsd = project_psd(Y);
    for (size_t k = 0; k < X.a.size(); ++k) P.a[k] = Y.a[k] - Ypsd.a[k];

    double gap = 0.0;
    for (size_t k = 0; k < X.a.size(); ++k) {
      double w = Ypsd.a[k] + Q.a[k];
      double xk = std::min(w, M.a[k]);
      Q.a[k] = w - xk;
      gap = std::max(gap, std::fabs(xk - Ypsd.a[k]));
      X.a[k] = xk;
    }
    if (gap <= 0.25 * tol_eff) {
      double worst = 0.0;
      for (size_t k = 0; k < X.a.size(); ++k)
        worst = std::min(worst, M.a[k] - Ypsd.a[k]);
      if (worst >= -tol_eff) return true;
    }
  }
  return false;
}

struct Cell {
  std::vector<int> verts;  // ids into the vertex pool
  std::vector<double> gram;  // p x p values v_a' M v_b
  int depth = 0;
};

// Bundfuss-Duer style simplicial partition over the standard simplex.
CopositivityVerdict partition_stage(const Matrix& M, double tol_eff, long budget,
                                    Candidate& best) {
  const int n = M.rows;
  CopositivityVerdict out;
  out.kind = CopositivityVerdict::Kind::Inconclusive;

  std::vector<std::vector<double>> pool(n);
  for (int i = 0; i < n; ++i) {
    pool[i].assign(n, 0.0);
    pool[i][i] = 1.0;
  }
  const size_t pool_cap = std::max<size_t>(1024, (256u << 20) / (sizeof(double) * n));

  std::vector<Cell> stack;
  {
    Cell root;
    root.verts.resize(n);
    for (int i = 0; i < n; ++i) root.verts[i] = i;
    root.gram = M.a;
    stack.push_back(std::move(root));
  }

  long cells = 0;
  int max_depth = 0;
  bool exhausted = false;
  double best_val = 0.0;

  while (!stack.empty()) {
    if (cells >= budget || pool.size() >= pool_cap || stack.size() > 100000) {
      exhausted = true;
      break;
    }
    Cell cell = std::move(stack.back());
    stack.pop_back();
    ++cells;
    const int p = static_cast<int>(cell.verts.size());
    auto S = [&](int a, int b) -> double { return cell.gram[a * p + b]; };

    double mn = 0.0;
    int ma = -1, mb = -1;
    for (int a = 0; a < p; ++a)
      for (int b = a; b < p; ++b)
        if (S(a, b) < mn) {
          mn = S(a, b);
          ma = a;
          mb = b;
        }
    best_val = std::min(best_val, mn);
    if (mn >= -tol_eff) {  // vertex-value and edge-bound test
      max_depth = std::max(max_depth, cell.depth);
      continue;
    }
    if (ma == mb || S(ma, ma) < -tol_eff || S(mb, mb) < -tol_eff) {
      const int a = (S(ma, ma) <= S(mb, mb)) ? ma : mb;
      if (S(a, a) < -tol_eff) {
        out.kind = CopositivityVerdict::Kind::Violator;
        out.v = pool[cell.verts[a]];
        out.value = S(a, a);
        out.cells = cells;
        return out;
      }
    }
    // Cheap strengthened certificate on small cells.
    if (p <= 32) {
      Matrix T(p, p);
      for (int a = 0; a < p; ++a)
        for (int b = 0; b < p; ++b)
          T(a, b) = (a != b && S(a, b) > 0.0) ? 0.0 : S(a, b);
      EigResult e = sym_eig(T);
      if (e.w.front() >= -tol_eff) {
        max_depth = std::max(max_depth, cell.depth);
        continue;
      }
    }

    // Longest edge among pairs violating the bound, lowest pair on ties.
    int ea = -1, eb = -1;
    double elen = -1.0;
    for (int a = 0; a < p; ++a)
      for (int b = a + 1; b < p; ++b) {
        if (S(a, b) >= -tol_eff) continue;
        const auto& va = pool[cell.verts[a]];
        const auto& vb = pool[cell.verts[b]];
        double d2 = 0.0;
        for (int k = 0; k < n; ++k) {
          const double d = va[k] - vb[k];
          d2 += d * d;
        }
        if (d2 > elen + 1e-15) {
          elen = d2;
          ea = a;
          eb = b;
        }
      }
    if (ea < 0) {  // only diagonal-adjacent trouble; treat as certified cell
      max_depth = std::max(max_depth, cell.depth);
      continue;
    }

    std::vector<double> mid(n);
    const auto& va = pool[cell.verts[ea]];
    const auto& vb = pool[cell.verts[eb]];
    for (int k = 0; k < n; ++k) mid[k] = 0.5 * (va[k] + vb[k]);
    const double midval = 0.25 * (S(ea, ea) + 2.0 * S(ea, eb) + S(eb, eb));
    best_val = std::min(best_val, midval);
    if (midval < -tol_eff) {
      out.kind = CopositivityVerdict::Kind::Violator;
      out.v = mid;
      out.value = midval;
      out.cells = cells;
      return out;
    }
    const int mid_id = static_cast<int>(pool.size());
    pool.push_back(std::move(mid));

    // Gram rows against the midpoint are averages of the parent rows.
    auto make_child = [&](int replace) {
      Cell ch;
      ch.depth = cell.depth + 1;
      ch.verts = cell.verts;
      ch.verts[replace] = mid_id;
      ch.gram = cell.gram;
      for (int b = 0; b < p; ++b) {
        const double v = 0.5 * (S(ea, b) + S(eb, b));
        ch.gram[replace * p + b] = v;
        ch.gram[b * p + replace] = v;
      }
      ch.gram[replace * p + replace] = midval;
      return ch;
    };
    stack.push_back(make_child(eb));
    stack.push_back(make_child(ea));  // processed first
  }

  out.cells = cells;
  if (!exhausted && stack.empty()) {
    out.kind = CopositivityVerdict::Kind::Certified;
    out.depth = max_depth;
  } else {
    out.value = best.found ? std::min(best.value, best_val) : best_val;
  }
  return out;
}

}  // namespace

CopositivityVerdict check_copositive(const Matrix& M, double tol, long budget) {
  const int n = M.rows;
  if (M.cols != n) throw std::invalid_argument("check_copositive: matrix must be square");
  const double scale = M.max_abs();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::fabs(M(i, j) - M(j, i)) > 1e-9 * std::max(1.0, scale))
        throw std::invalid_argument("check_copositive: matrix is not symmetric");
  const double tol_eff = tol * std::max(1.0, scale);

  CopositivityVerdict out;

  // Stage 1: negative diagonal entries are unit-vector violators.
  for (int k = 0; k < n; ++k)
    if (M(k, k) < -tol_eff) {
      out.kind = CopositivityVerdict::Kind::Violator;
      out.v.assign(n, 0.0);
      out.v[k] = 1.0;
      out.value = M(k, k);
      return out;
    }

  // Violator search: exact pair scan, then eigenvector and replicator
  // heuristics. Any hit short-circuits the certification stages.
  Candidate best;
  pair_scan(M, tol_eff, best);
  if (!best.found && n > 2) replicator_search(M, scale, tol_eff, best);
  if (best.found && best.value < -tol_eff) {
    out.kind = CopositivityVerdict::Kind::Violator;
    out.v = best.v;
    out.value = best.value;
    return out;
  }

  // Stage 2: membership in PSD + nonnegative certifies copositivity.
  if (psd_plus_n(M, tol_eff, 250)) {
    out.kind = CopositivityVerdict::Kind::Certified;
    out.depth = 0;
    return out;
  }

  // Stage 3: simplicial partition.
  return partition_stage(M, tol_eff, budget, best);
}

namespace {

// Per-multiplier coefficients of a linear functional of Omega(theta).
// For the bordered trace identities:
//   <H(h), W>  = w0 * h'w~        (lambda level)
//   <Ht(h), W> = (h'w~)' W-block (h...)  evaluated as quadratic form
//   <B_k, W>   = w0 * w~[x_k] - W[x_k, x_k]
// Specialized below for W = Y* (rank one) and W = vv' (cut vectors).
struct MasterData {
  int m = 0;
  std::vector<double> obj;     // dual objective coefficients
  std::vector<double> compl_row;  // Tr(A_k Y*)
  double compl_rhs = 0.0;         // -Tr(Qt Y*)
  std::vector<bool> sign;
};

MasterData build_master_data(const CopData& cd, const std::vector<double>& z) {
  MasterData md;
  md.m = cd.num_multipliers();
  md.sign = sign_constrained_mask(cd);
  md.obj.reserve(md.m);
  md.compl_row.reserve(md.m);

  std::vector<double> hz[4];
  for (int f = 0; f < 4; ++f) {
    hz[f].resize(cd.fam[f].size());
    for (size_t k = 0; k < cd.fam[f].size(); ++k) {
      double s = 0.0;
      for (const auto& [pos, coef] : cd.fam[f][k].h) s += coef * z[pos];
      hz[f][k] = s;
    }
  }
  for (int f = 0; f < 4; ++f)
    for (size_t k = 0; k < cd.fam[f].size(); ++k) {
      md.obj.push_back(cd.fam[f][k].rhs);
      md.compl_row.push_back(hz[f][k]);
    }
  for (int f = 0; f < 4; ++f)
    for (size_t k = 0; k < cd.fam[f].size(); ++k) {
      const double b = cd.fam[f][k].rhs;
      md.obj.push_back(b * b);
      md.compl_row.push_back(hz[f][k] * hz[f][k]);
    }
  for (size_t k = 0; k < cd.x_pos.size(); ++k) {
    md.obj.push_back(0.0);
    const double xv = z[cd.x_pos[k]];
    md.compl_row.push_back(xv - xv * xv);
  }

  double qz = 0.0;
  for (int k = 0; k < cd.N; ++k) qz += cd.q[k] * z[k];
  md.compl_rhs = -qz;
  return md;
}

// Row of coefficients for the cut v' Omega(theta) v >= 0, plus its rhs.
void cut_row(const CopData& cd, const std::vector<double>& v,
             std::vector<double>& coeffs, double& rhs) {
  const double v0 = v[0];
  coeffs.clear();
  coeffs.reserve(cd.num_multipliers());
  std::vector<double> hv[4];
  for (int f = 0; f < 4; ++f) {
    hv[f].resize(cd.fam[f].size());
    for (size_t k = 0; k < cd.fam[f].size(); ++k) {
      double s = 0.0;
      for (const auto& [pos, coef] : cd.fam[f][k].h) s += coef * v[pos + 1];
      hv[f][k] = s;
    }
  }
  for (int f = 0; f < 4; ++f)
    for (size_t k = 0; k < cd.fam[f].size(); ++k) coeffs.push_back(v0 * hv[f][k]);
  for (int f = 0; f < 4; ++f)
    for (size_t k = 0; k < cd.fam[f].size(); ++k)
      coeffs.push_back(hv[f][k] * hv[f][k]);
  for (size_t k = 0; k < cd.x_pos.size(); ++k) {
    const double xv = v[cd.x_pos[k] + 1];
    coeffs.push_back(v0 * xv - xv * xv);
  }
  double qv = 0.0;
  for (int k = 0; k < cd.N; ++k) qv += cd.q[k] * v[k + 1];
  rhs = -v0 * qv;
}

DualSolution solve_master(const CopData& cd, const MasterData& md, const CutPool& pool,
                          double lp_tol) {
  const int m = md.m;
  // Free multipliers (lam1, Lam1, delta) are split into +/- parts.
  std::vector<int> pos_col(m), neg_col(m, -1);
  int ncols = 0;
  for (int k = 0; k < m; ++k) pos_col[k] = ncols++;
  for (int k = 0; k < m; ++k)
    if (!md.sign[k]) neg_col[k] = ncols++;
  const int nslack = static_cast<int>(pool.cuts.size());
  const int ntot = ncols + nslack;
  const int nrows = 1 + nslack;

  DenseLp lp;
  lp.A = Matrix(nrows, ntot);
  lp.b.assign(nrows, 0.0);
  lp.c.assign(ntot, 0.0);

  for (int k = 0; k < m; ++k) {
    lp.c[pos_col[k]] = md.obj[k];
    if (neg_col[k] >= 0) lp.c[neg_col[k]] = -md.obj[k];
    lp.A(0, pos_col[k]) = md.compl_row[k];
    if (neg_col[k] >= 0) lp.A(0, neg_col[k]) = -md.compl_row[k];
  }
  lp.b[0] = md.compl_rhs;

  std::vector<double> coeffs;
  double rhs;
  for (int s = 0; s < nslack; ++s) {
    cut_row(cd, pool.cuts[s], coeffs, rhs);
    const int r = 1 + s;
    for (int k = 0; k < m; ++k) {
      lp.A(r, pos_col[k]) = coeffs[k];
      if (neg_col[k] >= 0) lp.A(r, neg_col[k]) = -coeffs[k];
    }
    lp.A(r, ncols + s) = -1.0;  // surplus
    lp.b[r] = rhs;
  }

  LpSolution sol = solve_lp(lp, lp_tol);
  if (sol.status == LpStatus::Stalled && std::getenv("COP_DUMP_LP")) {
    FILE* f = std::fopen(std::getenv("COP_DUMP_LP"), "w");
    std::fprintf(f, "%d %d\n", lp.A.rows, lp.A.cols);
    for (int r = 0; r < lp.A.rows; ++r) {
      for (int c = 0; c < lp.A.cols; ++c) std::fprintf(f, "%.17g ", lp.A(r, c));
      std::fprintf(f, "\n");
    }
    for (double v : lp.b) std::fprintf(f, "%.17g ", v);
    std::fprintf(f, "\n");
    for (double v : lp.c) std::fprintf(f, "%.17g ", v);
    std::fprintf(f, "\n");
    std::fclose(f);
  }
  if (sol.status == LpStatus::Infeasible)
    throw std::logic_error(
        "solve_cop_cutting_plane: master infeasible; dual orientation broken");
  if (sol.status != LpStatus::Optimal)
    throw std::runtime_error(std::string("solve_cop_cutting_plane: master LP failed: ") +
                             (sol.status == LpStatus::Unbounded ? "unbounded" : "stalled") +
                             " with " + std::to_string(pool.cuts.size()) + " cuts");

  std::vector<double> theta(m);
  for (int k = 0; k < m; ++k) {
    theta[k] = sol.u[pos_col[k]];
    if (neg_col[k] >= 0) theta[k] -= sol.u[neg_col[k]];
  }
  return unflatten_duals(cd, theta);
}

}  // namespace

CopSolveResult solve_cop_cutting_plane(const CopData& cd, const Instance& inst,
                                       const std::vector<double>& z_star,
                                       double milp_obj, const CopOptions& opts) {
  (void)inst;
  if (static_cast<int>(z_star.size()) != cd.N)
    throw std::invalid_argument("solve_cop_cutting_plane: z_star has wrong length");

  MasterData md = build_master_data(cd, z_star);
  CopSolveResult res;
  for (int k = 0; k < cd.n; ++k) {
    std::vector<double> e(cd.n, 0.0);
    e[k] = 1.0;
    res.pool.add(e);
  }

  for (int iter = 1; iter <= opts.max_iters; ++iter) {
    res.iterations = iter;
    res.duals = solve_master(cd, md, res.pool, opts.lp_tol);
    res.omega = omega_from_duals(cd, res.duals);
    res.verdict = check_copositive(res.omega, opts.cop_tol, opts.budget);
    if (res.verdict.kind == CopositivityVerdict::Kind::Violator) {
      if (!res.pool.add(res.verdict.v)) break;  // stalled on a repeat cut
      continue;
    }
    break;
  }

  res.duals.source = cd.reduced ? DualSource::CuttingPlaneReduced : DualSource::CuttingPlaneFull;
  res.duals.objective = dual_objective(cd, res.duals);
  res.gap = std::fabs(res.duals.objective - milp_obj) / std::max(1.0, std::fabs(milp_obj));
  const bool cert = res.verdict.kind == CopositivityVerdict::Kind::Certified;
  const bool below = res.verdict.kind == CopositivityVerdict::Kind::Inconclusive;
  res.converged = (cert || below) && res.gap <= opts.gap_tol;
  res.duals.status = cert ? CertStatus::CopositiveCertified : CertStatus::Uncertified;
  return res;
}

CopSolveResult solve_cop_reduced(const Instance& inst, const Assignment& a,
                                 const CopOptions& opts) {
  CopData cd = build_reduced_cop_data(inst, a);
  std::vector<double> z = lifted_z_star(cd, inst, a);
  return solve_cop_cutting_plane(cd, inst, z, a.objective, opts);
}

}  // namespace copoprice
