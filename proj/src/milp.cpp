#include "copoprice/milp.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace copoprice {

int Assignment::assigned_evse(int i) const {
  for (int j = 0; j < x.cols; ++j)
    if (x(i, j) > 0.5) return j;
  return -1;
}

PowerResult schedule_power(const Instance& inst, const Matrix& x) {
  const int I = inst.num_evs(), J = inst.num_evses(), T = inst.T;
  PowerResult res;

  for (int i = 0; i < I; ++i) {
    double row = 0.0;
    for (int j = 0; j < J; ++j) row += x(i, j);
    if (row > 1.5) return res;  // uniqueness violated
  }
  for (int j = 0; j < J; ++j)
    for (int t = 0; t < T; ++t) {
      double occ = 0.0;
      for (int i = 0; i < I; ++i)
        if (availability(inst, i + 1, t + 1)) occ += x(i, j);
      if (occ > 1.5) {
        res.bad_j = j;
        res.bad_t = t;
        return res;
      }
    }

  // Price-sorted slot order, earlier slot first on ties.
  std::vector<int> order(T);
  for (int t = 0; t < T; ++t) order[t] = t;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return inst.grid_price[a] < inst.grid_price[b]; });

  Matrix p(J, T);
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j) {
      if (x(i, j) < 0.5) continue;
      double rem = inst.evs[i].e;
      for (int t : order) {
        if (!availability(inst, i + 1, t + 1)) continue;
        const double amt = std::min(rem, inst.evses[j].capacity[t]);
        p(j, t) += amt;
        rem -= amt;
        if (rem <= 0.0) break;
      }
      if (rem > 1e-12) return res;  // window capacity too small
    }
  res.feasible = true;
  res.p = std::move(p);
  return res;
}

double welfare(const Instance& inst, const Matrix& x, const Matrix& p) {
  double w = 0.0;
  for (int i = 0; i < inst.num_evs(); ++i)
    for (int j = 0; j < inst.num_evses(); ++j) w += inst.evs[i].v * x(i, j);
  for (int j = 0; j < inst.num_evses(); ++j)
    for (int t = 0; t < inst.T; ++t) w -= inst.grid_price[t] * p(j, t);
  return w;
}

Assignment make_assignment(const Instance& inst, const Matrix& x, const Matrix& p) {
  const int I = inst.num_evs(), J = inst.num_evses(), T = inst.T;
  Assignment a;
  a.x = x;
  a.p = p;
  a.phi = Matrix(I, J);
  a.psi = Matrix(J, T);
  a.zeta = Matrix(J, T);
  a.xi.assign(I, 0.0);
  for (int i = 0; i < I; ++i) {
    double row = 0.0;
    for (int j = 0; j < J; ++j) {
      double got = 0.0;
      for (int t = 0; t < T; ++t)
        if (availability(inst, i + 1, t + 1)) got += p(j, t);
      a.phi(i, j) = got - inst.evs[i].e * x(i, j);
      row += x(i, j);
    }
    a.xi[i] = 1.0 - row;
  }
  for (int j = 0; j < J; ++j)
    for (int t = 0; t < T; ++t) {
      double occ = 0.0;
      for (int i = 0; i < I; ++i)
        if (availability(inst, i + 1, t + 1)) occ += x(i, j);
      a.psi(j, t) = 1.0 - occ;
      a.zeta(j, t) = inst.evses[j].capacity[t] - p(j, t);
    }
  a.objective = welfare(inst, x, p);
  return a;
}

namespace {

// Sequence of assigned EVSE labels per user, J for unserved. Canonical
// form minimizes this lexicographically.
std::vector<int> signature(const Matrix& x) {
  std::vector<int> sig(x.rows, x.cols);
  for (int i = 0; i < x.rows; ++i)
    for (int j = 0; j < x.cols; ++j)
      if (x(i, j) > 0.5) sig[i] = j;
  return sig;
}

}  // namespace

Assignment canonicalize(const Instance& inst, const Assignment& a) {
  const int I = inst.num_evs(), J = inst.num_evses();
  // Group EVSEs by identical capacity vectors; only those may be swapped.
  std::vector<int> group(J, 0);
  std::vector<std::vector<double>> reps;
  for (int j = 0; j < J; ++j) {
    int g = -1;
    for (size_t k = 0; k < reps.size(); ++k)
      if (reps[k] == inst.evses[j].capacity) {
        g = static_cast<int>(k);
        break;
      }
    if (g < 0) {
      reps.push_back(inst.evses[j].capacity);
      g = static_cast<int>(reps.size()) - 1;
    }
    group[j] = g;
  }

  // Greedy relabel: walking users in order, each newly seen EVSE takes the
  // smallest free slot of its capacity group. This is the lex-min label
  // sequence since group labels are interchangeable.
  std::vector<std::vector<int>> slots(reps.size());
  for (int j = 0; j < J; ++j) slots[group[j]].push_back(j);
  std::vector<size_t> next_slot(reps.size(), 0);
  std::vector<int> dest(J, -1);
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j)
      if (a.x(i, j) > 0.5 && dest[j] < 0) {
        const int g = group[j];
        dest[j] = slots[g][next_slot[g]++];
      }
  for (int j = 0; j < J; ++j)  // idle EVSEs keep original order
    if (dest[j] < 0) {
      const int g = group[j];
      dest[j] = slots[g][next_slot[g]++];
    }

  Assignment out = a;
  out.x = Matrix(I, J);
  out.p = Matrix(a.p.rows, a.p.cols);
  out.psi = Matrix(a.psi.rows, a.psi.cols);
  out.zeta = Matrix(a.zeta.rows, a.zeta.cols);
  out.phi = Matrix(a.phi.rows, a.phi.cols);
  for (int j = 0; j < J; ++j) {
    for (int i = 0; i < I; ++i) {
      out.x(i, dest[j]) = a.x(i, j);
      out.phi(i, dest[j]) = a.phi(i, j);
    }
    for (int t = 0; t < inst.T; ++t) {
      out.p(dest[j], t) = a.p(j, t);
      out.psi(dest[j], t) = a.psi(j, t);
      out.zeta(dest[j], t) = a.zeta(j, t);
    }
  }
  return out;
}

namespace {

struct Node {
  double bound;
  long id;
  std::vector<signed char> fix;  // per (i,j): -1 free, 0, 1
  bool operator<(const Node& other) const {
    if (bound != other.bound) return bound < other.bound;  // max-heap on bound
    return id > other.id;
  }
};

LpSolution solve_node_lp(const Instance& inst, const std::vector<signed char>& fix,
                         Matrix* x_out) {
  const int I = inst.num_evs(), J = inst.num_evses(), T = inst.T;
  const int nx = I * J, np = J * T;
  const int n = nx + np + nx + np + np + I;
  const int m = nx + np + np + I;

  DenseLp lp;
  lp.A = Matrix(m, n);
  lp.b.assign(m, 0.0);
  lp.c.assign(n, 0.0);
  lp.lower.assign(n, 0.0);
  lp.upper.assign(n, std::nullopt);
  auto X = [&](int i, int j) { return i * J + j; };
  auto P = [&](int j, int t) { return nx + j * T + t; };
  const int sE = nx + np, sO = sE + nx, sC = sO + np, sU = sC + np;

  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j) {
      const int k = X(i, j);
      lp.c[k] = -inst.evs[i].v;
      switch (fix[k]) {
        case 0: lp.upper[k] = 0.0; break;
        case 1: lp.lower[k] = 1.0; lp.upper[k] = 1.0; break;
        default: lp.upper[k] = 1.0; break;
      }
    }
  for (int j = 0; j < J; ++j)
    for (int t = 0; t < T; ++t) lp.c[P(j, t)] = inst.grid_price[t];

  int r = 0;
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j, ++r) {
      for (int t = 0; t < T; ++t)
        if (availability(inst, i + 1, t + 1)) lp.A(r, P(j, t)) = 1.0;
      lp.A(r, X(i, j)) = -inst.evs[i].e;
      lp.A(r, sE + i * J + j) = -1.0;
    }
  for (int j = 0; j < J; ++j)
    for (int t = 0; t < T; ++t, ++r) {
      for (int i = 0; i < I; ++i)
        if (availability(inst, i + 1, t + 1)) lp.A(r, X(i, j)) = 1.0;
      lp.A(r, sO + j * T + t) = 1.0;
      lp.b[r] = 1.0;
    }
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
  if (sol.status == LpStatus::Optimal && x_out) {
    *x_out = Matrix(I, J);
    for (int i = 0; i < I; ++i)
      for (int j = 0; j < J; ++j) (*x_out)(i, j) = sol.u[X(i, j)];
  }
  return sol;
}

}  // namespace

Assignment solve_milp(const Instance& inst, const BnbOptions& opts) {
  inst.validate();
  const int I = inst.num_evs(), J = inst.num_evses();

  // Incumbent starts from the all-unserved solution.
  Matrix x0(I, J);
  Assignment best = make_assignment(inst, x0, Matrix(J, inst.T));
  bool have_best = true;

  std::priority_queue<Node> queue;
  Node root;
  root.fix.assign(static_cast<size_t>(I) * J, -1);
  root.id = 0;
  Matrix xr;
  LpSolution rsol = solve_node_lp(inst, root.fix, &xr);
  if (rsol.status != LpStatus::Optimal)
    return canonicalize(inst, best);  // only the trivial solution exists
  root.bound = -rsol.objective;
  queue.push(root);

  long nodes = 0;
  long next_id = 1;
  double best_open_bound = root.bound;

  while (!queue.empty()) {
    Node node = queue.top();
    queue.pop();
    if (++nodes > opts.node_limit)
      throw NodeLimitError(have_best ? best.objective : 0.0, node.bound);
    if (node.bound <= best.objective + opts.gap_tol) continue;

    Matrix xf;
    LpSolution sol = solve_node_lp(inst, node.fix, &xf);
    if (sol.status != LpStatus::Optimal) continue;
    const double bound = -sol.objective;
    if (bound <= best.objective + opts.gap_tol) continue;

    // Most fractional assignment variable.
    int bi = -1, bj = -1;
    double worst = opts.int_tol;
    for (int i = 0; i < I; ++i)
      for (int j = 0; j < J; ++j) {
        const double f = std::fabs(xf(i, j) - std::round(xf(i, j)));
        if (f > worst) {
          worst = f;
          bi = i;
          bj = j;
        }
      }

    if (bi < 0) {
      // Integral: rebuild the exact cost-minimal schedule.
      Matrix xi(I, J);
      for (int i = 0; i < I; ++i)
        for (int j = 0; j < J; ++j) xi(i, j) = std::round(xf(i, j));
      PowerResult pr = schedule_power(inst, xi);
      if (!pr.feasible) continue;
      const double obj = welfare(inst, xi, pr.p);
      if (obj > best.objective + opts.gap_tol) {
        best = make_assignment(inst, xi, pr.p);
        have_best = true;
      } else if (obj > best.objective - opts.gap_tol) {
        Assignment cand = canonicalize(inst, make_assignment(inst, xi, pr.p));
        if (signature(cand.x) < signature(canonicalize(inst, best).x)) best = cand;
      }
      continue;
    }

    for (int v = 1; v >= 0; --v) {
      Node child;
      child.fix = node.fix;
      child.fix[static_cast<size_t>(bi) * J + bj] = static_cast<signed char>(v);
      child.bound = bound;
      child.id = next_id++;
      queue.push(child);
    }
    best_open_bound = std::max(best_open_bound, bound);
  }
  return canonicalize(inst, best);
}

Assignment solve_exhaustive(const Instance& inst) {
  inst.validate();
  const int I = inst.num_evs(), J = inst.num_evses(), T = inst.T;

  std::vector<int> choice(I, -1);  // -1 = unserved, else EVSE index
  Matrix occ(J, T);                // running occupancy counts
  Matrix best_x(I, J);
  double best_obj = 0.0;
  bool have = false;
  std::vector<int> best_sig;

  auto consider = [&]() {
    Matrix x(I, J);
    for (int i = 0; i < I; ++i)
      if (choice[i] >= 0) x(i, choice[i]) = 1.0;
    PowerResult pr = schedule_power(inst, x);
    if (!pr.feasible) return;
    const double obj = welfare(inst, x, pr.p);
    if (!have || obj > best_obj + 1e-12) {
      best_obj = obj;
      best_x = x;
      best_sig = signature(canonicalize(inst, make_assignment(inst, x, pr.p)).x);
      have = true;
    } else if (obj > best_obj - 1e-9) {
      auto sig = signature(canonicalize(inst, make_assignment(inst, x, pr.p)).x);
      if (sig < best_sig) {
        best_x = x;
        best_sig = std::move(sig);
      }
    }
  };

  // Depth-first over per-user options with occupancy pruning.
  auto rec = [&](auto&& self, int i) -> void {
    if (i == I) {
      consider();
      return;
    }
    choice[i] = -1;
    self(self, i + 1);
    for (int j = 0; j < J; ++j) {
      bool ok = true;
      for (int t = 0; t < T && ok; ++t)
        if (availability(inst, i + 1, t + 1) && occ(j, t) > 0.5) ok = false;
      if (!ok) continue;
      choice[i] = j;
      for (int t = 0; t < T; ++t)
        if (availability(inst, i + 1, t + 1)) occ(j, t) += 1.0;
      self(self, i + 1);
      for (int t = 0; t < T; ++t)
        if (availability(inst, i + 1, t + 1)) occ(j, t) -= 1.0;
      choice[i] = -1;
    }
  };
  rec(rec, 0);

  PowerResult pr = schedule_power(inst, best_x);
  return canonicalize(inst, make_assignment(inst, best_x, pr.p));
}

}  // namespace copoprice
