#pragma once

#include <Eigen/Core>

namespace vistrack {

struct LpResult {
  Eigen::VectorXd x;
  double objective = 0.0;
  int pivots = 0;
};

/// Dense two-phase simplex for min c.x subject to A x <= b, x >= 0.
/// Throws SolverError if the problem is infeasible, unbounded, or cycles
/// past the pivot cap. Meant for the small subproblems of the planner.
LpResult solve_lp(const Eigen::VectorXd& c, const Eigen::MatrixXd& a, const Eigen::VectorXd& b);

/// min grad.d + eta * sum_i max(g_i + jac_i.d, 0) over lo <= d <= hi.
/// Returns the minimizing step d.
Eigen::VectorXd solve_hinge_box(const Eigen::VectorXd& grad, const Eigen::VectorXd& g, const Eigen::MatrixXd& jac,
                                double eta, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);

/// Value of the hinge model above at d.
double hinge_model(const Eigen::VectorXd& grad, const Eigen::VectorXd& g, const Eigen::MatrixXd& jac, double eta,
                   const Eigen::VectorXd& d);

}  // namespace vistrack
