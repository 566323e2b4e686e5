#include "vistrack/belief.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace vistrack {

RobotBelief propagate_robot_belief(const RobotBelief& b, const RobotInput& u, const NoiseCovs& covs, double dt) {
  const Mat4 a = robot_jacobian(b.mean, u, dt);
  RobotBelief out;
  out.mean = robot_step(b.mean, u, dt);
  const Mat4 q = a * b.cov * a.transpose() + covs.robot;
  out.cov = 0.5 * (q + q.transpose());
  return out;
}

SmallMat bpod_covariance_update(const SmallMat& p_prior, const SmallMat& c_tilde, const SmallMat& rs, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("bpod_covariance_update: gamma outside [0, 1]");
  if (gamma == 0.0) return p_prior;
  const SmallMat cp = c_tilde * p_prior;
  const SmallMat s = symmetrize(cp * c_tilde.transpose() + rs);
  Eigen::LDLT<SmallMat> ldlt(s);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.vectorD().minCoeff() <= 0.0) {
    throw NumericalError("bpod_covariance_update: C P C^T + R^s is singular");
  }
  // K C P = P C^T S^-1 C P
  const SmallMat kcp = cp.transpose() * ldlt.solve(cp);
  SmallMat out = symmetrize(p_prior - gamma * kcp);

  Eigen::SelfAdjointEigenSolver<SmallMat> es(out);
  if (es.eigenvalues().minCoeff() < kCovEigenFloor) {
    const auto lambda = es.eigenvalues().cwiseMax(kCovEigenFloor);
    out = symmetrize(es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().transpose());
  }
  return out;
}

double belief_entropy(const SmallMat& p, int d) {
  const double det = std::max(p.determinant(), kDeterminantFloor);
  return 0.5 * d * (std::log(2.0 * std::numbers::pi) + 1.0) + 0.5 * std::log(det);
}

}  // namespace vistrack
