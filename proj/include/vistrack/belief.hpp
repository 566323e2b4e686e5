#pragma once

#include "vistrack/estimator.hpp"

namespace vistrack {

struct RobotBelief {
  RobotState mean;
  Mat4 cov = Mat4::Zero();
};

using TargetBelief = GaussianBelief;

inline constexpr double kDeterminantFloor = 1e-300;
inline constexpr double kCovEigenFloor = 1e-12;

/// EKF prediction of the robot belief: mean through the unicycle model,
/// Q <- A Q A^T + R^r.
RobotBelief propagate_robot_belief(const RobotBelief& b, const RobotInput& u, const NoiseCovs& covs, double dt);

/// Detection-probability weighted covariance update P - gamma * K C P, where
/// K is the Kalman gain for the measurement Jacobian `c_tilde` evaluated at
/// the belief means. gamma = 0 leaves P alone; gamma = 1 is the full EKF update.
/// Throws NumericalError if C P C^T + R^s is singular.
SmallMat bpod_covariance_update(const SmallMat& p_prior, const SmallMat& c_tilde, const SmallMat& rs, double gamma);

/// Differential entropy of a d-dimensional Gaussian with covariance P, nats.
double belief_entropy(const SmallMat& p, int d);

}  // namespace vistrack
