#include "vistrack/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "vistrack/errors.hpp"

namespace vistrack {

namespace {

constexpr double kEps = 1e-10;

// Tableau rows 0..m-1 are constraints, the last column is the right-hand side.
struct Tableau {
  Eigen::MatrixXd t;
  std::vector<int> basis;
  int pivots = 0;

  int rows() const { return static_cast<int>(t.rows()); }
  int rhs() const { return static_cast<int>(t.cols()) - 1; }

  void pivot(int r, int c) {
    t.row(r) /= t(r, c);
    for (int i = 0; i < rows(); ++i) {
      if (i != r && t(i, c) != 0.0) t.row(i) -= t(i, c) * t.row(r);
    }
    basis[static_cast<std::size_t>(r)] = c;
    ++pivots;
  }

  // Minimizes cost.x over the current feasible basis; columns >= `allowed`
  // never enter.
  void optimize(const Eigen::VectorXd& cost, int allowed) {
    const int max_pivots = 50 * (rows() + rhs()) + 1000;
    int degenerate = 0;
    while (true) {
      Eigen::VectorXd reduced = cost;
      for (int i = 0; i < rows(); ++i) {
        const double cb = cost[basis[static_cast<std::size_t>(i)]];
        if (cb != 0.0) reduced -= cb * t.row(i).head(rhs()).transpose();
      }
      // Dantzig's rule, switching to Bland's after a run of degenerate pivots.
      const bool bland = degenerate > 20;
      int enter = -1;
      double best = -kEps;
      for (int j = 0; j < allowed; ++j) {
        if (reduced[j] < best) {
          enter = j;
          if (bland) break;
          best = reduced[j];
        }
      }
      if (enter < 0) return;

      int leave = -1;
      double ratio = std::numeric_limits<double>::infinity();
      for (int i = 0; i < rows(); ++i) {
        if (t(i, enter) > kEps) {
          const double q = t(i, rhs()) / t(i, enter);
          if (q < ratio - kEps ||
              (q < ratio + kEps && leave >= 0 &&
               basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
            ratio = q;
            leave = i;
          }
        }
      }
      if (leave < 0) throw SolverError("solve_lp: problem is unbounded");
      degenerate = ratio < kEps ? degenerate + 1 : 0;
      pivot(leave, enter);
      if (pivots > max_pivots) throw SolverError("solve_lp: pivot limit exceeded");
    }
  }
};

}  // namespace

LpResult solve_lp(const Eigen::VectorXd& c, const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  std::vector<int> art_rows;
  for (int i = 0; i < m; ++i) {
    if (b[i] < 0.0) art_rows.push_back(i);
  }
  const int k = static_cast<int>(art_rows.size());
  const int cols = n + m + k;

  Tableau tab;
  tab.t = Eigen::MatrixXd::Zero(m, cols + 1);
  tab.basis.assign(static_cast<std::size_t>(m), 0);
  for (int i = 0, art = 0; i < m; ++i) {
    if (b[i] < 0.0) {
      tab.t.row(i).head(n) = -a.row(i);
      tab.t(i, n + i) = -1.0;
      tab.t(i, n + m + art) = 1.0;
      tab.t(i, cols) = -b[i];
      tab.basis[static_cast<std::size_t>(i)] = n + m + art;
      ++art;
    } else {
      tab.t.row(i).head(n) = a.row(i);
      tab.t(i, n + i) = 1.0;
      tab.t(i, cols) = b[i];
      tab.basis[static_cast<std::size_t>(i)] = n + i;
    }
  }

  if (k > 0) {
    Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(cols);
    phase1.tail(k).setOnes();
    tab.optimize(phase1, cols);
    double infeasibility = 0.0;
    for (int i = 0; i < m; ++i) {
      if (tab.basis[static_cast<std::size_t>(i)] >= n + m) infeasibility += tab.t(i, cols);
    }
    if (infeasibility > 1e-8) throw SolverError("solve_lp: problem is infeasible");
    // Drive zero-level artificials out of the basis where possible.
    for (int i = 0; i < m; ++i) {
      if (tab.basis[static_cast<std::size_t>(i)] < n + m) continue;
      for (int j = 0; j < n + m; ++j) {
        if (std::abs(tab.t(i, j)) > 1e-9) {
          tab.pivot(i, j);
          break;
        }
      }
    }
  }

  Eigen::VectorXd cost = Eigen::VectorXd::Zero(cols);
  cost.head(n) = c;
  tab.optimize(cost, n + m);

  LpResult out;
  out.x = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < m; ++i) {
    const int j = tab.basis[static_cast<std::size_t>(i)];
    if (j < n) out.x[j] = tab.t(i, cols);
  }
  out.objective = c.dot(out.x);
  out.pivots = tab.pivots;
  return out;
}

double hinge_model(const Eigen::VectorXd& grad, const Eigen::VectorXd& g, const Eigen::MatrixXd& jac, double eta,
                   const Eigen::VectorXd& d) {
  double v = grad.dot(d);
  if (g.size() > 0) v += eta * (g + jac * d).cwiseMax(0.0).sum();
  return v;
}

Eigen::VectorXd solve_hinge_box(const Eigen::VectorXd& grad, const Eigen::VectorXd& g, const Eigen::MatrixXd& jac,
                                double eta, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  const Eigen::Index n = grad.size();
  const Eigen::VectorXd width = hi - lo;

  // Hinges that stay inactive over the whole box contribute nothing.
  std::vector<Eigen::Index> live;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const double at_lo = g[i] + jac.row(i).dot(lo);
    const double reach = at_lo + (jac.row(i).transpose().cwiseMax(0.0).array() * width.array()).sum();
    if (reach > 0.0) live.push_back(i);
  }

  if (live.empty()) {
    Eigen::VectorXd d(n);
    for (Eigen::Index j = 0; j < n; ++j) d[j] = grad[j] > 0.0 ? lo[j] : (grad[j] < 0.0 ? hi[j] : 0.0);
    for (Eigen::Index j = 0; j < n; ++j) d[j] = std::clamp(d[j], lo[j], hi[j]);
    return d;
  }

  // Variables: s = d - lo in [0, width], t >= 0 with t_i >= g_i + J_i (lo + s).
  const Eigen::Index m = static_cast<Eigen::Index>(live.size());
  Eigen::VectorXd c(n + m);
  c.head(n) = grad;
  c.tail(m).setConstant(eta);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + m, n + m);
  Eigen::VectorXd b(n + m);
  for (Eigen::Index j = 0; j < n; ++j) {
    a(j, j) = 1.0;
    b[j] = width[j];
  }
  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Index i = live[static_cast<std::size_t>(r)];
    a.row(n + r).head(n) = jac.row(i);
    a(n + r, n + r) = -1.0;
    b[n + r] = -(g[i] + jac.row(i).dot(lo));
  }
  const LpResult sol = solve_lp(c, a, b);
  Eigen::VectorXd d = lo + sol.x.head(n);
  for (Eigen::Index j = 0; j < n; ++j) d[j] = std::clamp(d[j], lo[j], hi[j]);
  return d;
}

}  // namespace vistrack
