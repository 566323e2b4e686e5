#pragma once

#include <Eigen/Core>

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vistrack/belief.hpp"
#include "vistrack/possdf.hpp"

namespace vistrack {

/// FovDistance sums the linearized signed distance from the target mean to the
/// FOV; the solver falls back to it when no horizon step has any visibility,
/// where the probabilistic objectives have no usable gradient.
enum class Objective { CumulativeEntropy, NegCumulativeBpod, FovDistance };

struct PlannerConfig {
  int horizon = 4;
  double dt = 0.5;
  Limits limits;
  double delta_s = 0.05;  // per-step, per-obstacle collision risk bound
  Objective objective = Objective::CumulativeEntropy;
  double relax_tf = 0.3;
  double relax_lo = 0.1;
  double valid_obstacle_radius = 8.0;

  void validate() const;
};

struct ScpParams {
  double eta0 = 10.0;
  double d0 = 0.5;
  double beta = 10.0;
  double tau_c = 1e-3;
  double tau_p = 1e-4;
  double tau_f = 1e-4;
  double trust_expand = 1.5;
  double trust_shrink = 0.5;
  double ratio_accept = 0.1;
  int max_outer = 5;
  int max_inner = 30;
  double fd_step = 1e-4;
  int seed_levels = 5;  // per-axis grid of constant-control starts; < 2 disables

  void validate() const;
};

/// Controls (omega_0, a_0, omega_1, a_1, ...) over the horizon.
using DecisionVector = Eigen::VectorXd;

inline RobotInput control_at(const DecisionVector& u, int i) { return {u[2 * i], u[2 * i + 1]}; }
DecisionVector clamp_to_limits(DecisionVector u, const Limits& limits);
/// Drop the executed control and repeat the last one.
DecisionVector shift_warm_start(const DecisionVector& prev);

/// Map, models, and the target input assumed over the horizon.
struct PlanningContext {
  std::span<const ConvexBody> obstacles;
  FovParams fov;
  ConvexBody fov_local = ConvexBody::point(Vec2::Zero());
  TargetModel target_model;
  std::vector<SmallVec> target_inputs;  // one per horizon step
  SensorModel sensor;
  NoiseCovs noise;

  PlanningContext(std::span<const ConvexBody> obstacles, const FovParams& fov, const TargetModel& model,
                  const SensorModel& sensor, const NoiseCovs& noise);
  /// Hold `u` constant over `horizon` steps.
  void hold_target_input(const SmallVec& u, int horizon);
};

struct StepSdfParams {
  SdfParams tf;
  std::vector<SdfParams> lo;  // parallel to the valid-obstacle list
  std::vector<SdfParams> ro;
  bool degenerate = false;    // robot and target means coincide
};
using SdfParamSet = std::vector<StepSdfParams>;

struct StepGammas {
  double tf = 0.0;
  double tf_distance = 0.0;  // linearized sd of the target mean to the FOV
  std::vector<double> lo;
  double gamma = 0.0;
  std::vector<double> ro;

  double min_lo() const;
  double max_ro() const;
};

struct RolloutResult {
  std::vector<RobotBelief> robot_beliefs;
  std::vector<TargetBelief> target_priors;   // before the visibility-weighted update
  std::vector<TargetBelief> target_beliefs;  // after it
  std::vector<StepGammas> gammas;
  std::vector<int> valid;                    // obstacle indices evaluated
  SdfParamSet params;                        // parameters the gammas were computed with
};

/// Belief propagation under `u`. With `frozen`, the SDF parameters are taken
/// from it instead of running GJK/EPA at the current means.
RolloutResult rollout(const DecisionVector& u, const RobotBelief& rb0, const TargetBelief& tb0,
                      const PlanningContext& ctx, const PlannerConfig& cfg, std::span<const int> valid,
                      const SdfParamSet* frozen = nullptr);

double objective(const RolloutResult& r, Objective kind);

struct PenaltyValue {
  double jm = 0.0;
  double violations = 0.0;
};

/// Nonlinear inequality constraints g <= 0, in a fixed order: collision
/// chance constraints per step and valid obstacle, then per step the upper and
/// lower speed bounds.
Eigen::VectorXd constraint_values(const RolloutResult& r, const PlannerConfig& cfg);

/// Summed positive parts of the nonlinear inequality constraints: collision
/// chance constraints and mean speeds outside [speed_min, speed_max].
double constraint_violations(const RolloutResult& r, const PlannerConfig& cfg);
PenaltyValue penalty_objective(const RolloutResult& r, double eta, const PlannerConfig& cfg);

/// Obstacles whose signed distance to the mean line of sight is <= radius.
std::vector<int> valid_obstacles(std::span<const ConvexBody> obstacles, const Vec2& robot, const Vec2& target,
                                 double radius);

struct TrustStep {
  int outer = 0;
  double eta = 0.0;
  double trust_radius = 0.0;
  double predicted = 0.0;
  double actual = 0.0;
  double ratio = 0.0;
  bool accepted = false;
};

struct ScpDiagnostics {
  int outer_iterations = 0;
  int inner_iterations = 0;
  int rollouts = 0;
  int param_refreshes = 0;
  double final_eta = 0.0;
  double final_violation = 0.0;
  bool constraints_met = false;
  bool recovery = false;  // solved with the FovDistance fallback objective
  std::vector<double> violation_history;  // per outer iteration
  std::vector<TrustStep> steps;
  std::string message;
};

struct ScpResult {
  DecisionVector controls;
  RolloutResult rollout;
  ScpDiagnostics diagnostics;
};

/// Central-difference gradient of J_m with the parameter set held fixed.
Eigen::VectorXd frozen_gradient(const DecisionVector& x, const RobotBelief& rb0, const TargetBelief& tb0,
                                const PlanningContext& ctx, const PlannerConfig& cfg, std::span<const int> valid,
                                const SdfParamSet& frozen, double eta, double h, int* rollouts = nullptr);

/// Objective and constraint values with their central-difference derivatives,
/// all taken with the parameter set held fixed.
struct FrozenLinearization {
  double j = 0.0;
  Eigen::VectorXd grad;     // dJ/dx
  Eigen::VectorXd g;        // constraint_values
  Eigen::MatrixXd jacobian; // dg/dx
};
FrozenLinearization frozen_linearization(const DecisionVector& x, const RobotBelief& rb0, const TargetBelief& tb0,
                                         const PlanningContext& ctx, const PlannerConfig& cfg,
                                         std::span<const int> valid, const SdfParamSet& frozen, double h,
                                         int* rollouts = nullptr);

/// Sequential convex programming with an l1 penalty and box trust region.
/// SDF parameters are frozen while differentiating and refreshed once per
/// candidate step. Throws SolverError if the robot mean starts inside an
/// obstacle or the gradient is not finite.
ScpResult scp_solve(const RobotBelief& rb0, const TargetBelief& tb0, const PlanningContext& ctx,
                    const PlannerConfig& cfg, const ScpParams& scp, const std::optional<DecisionVector>& warm);

}  // namespace vistrack
