#include "vistrack/estimator.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <stdexcept>

namespace vistrack {

SmallMat symmetrize(const SmallMat& p) { return 0.5 * (p + p.transpose()); }

double min_eigenvalue(const SmallMat& p) {
  Eigen::SelfAdjointEigenSolver<SmallMat> es(p, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

GaussianBelief ekf_predict(const GaussianBelief& belief, const TargetModel& model, const SmallVec& u,
                           const NoiseCovs& covs, double dt) {
  const SmallMat a = target_jacobian(model, belief.mean, u, dt);
  GaussianBelief out;
  out.mean = target_step(model, belief.mean, u, dt);
  out.cov = symmetrize(a * belief.cov * a.transpose() + covs.target);
  return out;
}

GaussianBelief ekf_update(const GaussianBelief& prior, const std::optional<SmallVec>& y, const SensorModel& sensor,
                          const RobotState& zr) {
  if (!y) return prior;
  if (y->size() != sensor.dim()) throw std::invalid_argument("measurement dimension does not match the sensor");

  const SmallMat c = measurement_jacobian(sensor, prior.mean, zr);
  const SmallMat s = symmetrize(c * prior.cov * c.transpose() + sensor.noise_cov);
  Eigen::LDLT<SmallMat> ldlt(s);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.vectorD().minCoeff() <= 0.0) {
    throw NumericalError("ekf_update: innovation covariance is singular");
  }
  const SmallMat k = ldlt.solve(c * prior.cov).transpose();

  SmallVec innovation = *y - measure(sensor, prior.mean, zr);
  for (int i = 0; i < innovation.size(); ++i) {
    if (SensorModel::is_angular(i)) innovation[i] = wrap_angle(innovation[i]);
  }

  GaussianBelief post;
  post.mean = prior.mean + k * innovation;
  if (prior.dim() == 3) post.mean[2] = wrap_angle(post.mean[2]);
  post.cov = symmetrize(prior.cov - k * c * prior.cov);
  if (min_eigenvalue(post.cov) < -1e-9) {
    const SmallMat ikc = SmallMat::Identity(prior.dim(), prior.dim()) - k * c;
    post.cov = symmetrize(ikc * prior.cov * ikc.transpose() + k * sensor.noise_cov * k.transpose());
  }
  return post;
}

}  // namespace vistrack
