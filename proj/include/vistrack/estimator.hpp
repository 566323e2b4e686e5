#pragma once

#include <optional>

#include "vistrack/models.hpp"

namespace vistrack {

struct GaussianBelief {
  SmallVec mean;
  SmallMat cov;

  int dim() const { return static_cast<int>(mean.size()); }
};

/// (P + P^T) / 2
SmallMat symmetrize(const SmallMat& p);
double min_eigenvalue(const SmallMat& p);

GaussianBelief ekf_predict(const GaussianBelief& belief, const TargetModel& model, const SmallVec& u,
                           const NoiseCovs& covs, double dt);

/// An absent measurement returns the prior untouched. Angular innovation
/// components are wrapped; the covariance is resymmetrized and recomputed in
/// Joseph form if the short form loses semidefiniteness.
/// Throws NumericalError if the innovation covariance is singular.
GaussianBelief ekf_update(const GaussianBelief& prior, const std::optional<SmallVec>& y, const SensorModel& sensor,
                          const RobotState& zr);

}  // namespace vistrack
