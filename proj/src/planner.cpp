#include "vistrack/planner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vistrack {

void PlannerConfig::validate() const {
  if (horizon < 1) throw std::invalid_argument("planner: horizon must be >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("planner: dt must be positive");
  if (!(delta_s > 0.0 && delta_s < 1.0)) throw std::invalid_argument("planner: delta_s must lie in (0, 1)");
  if (!(valid_obstacle_radius > 0.0)) throw std::invalid_argument("planner: valid_obstacle_radius must be positive");
  limits.validate();
}

void ScpParams::validate() const {
  if (!(beta > 1.0)) throw std::invalid_argument("scp: beta must exceed 1");
  if (!(eta0 > 0.0 && d0 > 0.0)) throw std::invalid_argument("scp: eta0 and d0 must be positive");
  if (!(tau_c > 0.0 && tau_p > 0.0 && tau_f > 0.0)) throw std::invalid_argument("scp: tolerances must be positive");
  if (!(trust_shrink > 0.0 && trust_shrink < 1.0 && trust_expand > 1.0)) {
    throw std::invalid_argument("scp: need 0 < trust_shrink < 1 < trust_expand");
  }
  if (!(ratio_accept > 0.0 && ratio_accept < 1.0)) throw std::invalid_argument("scp: ratio_accept must lie in (0, 1)");
  if (max_outer < 1 || max_inner < 1) throw std::invalid_argument("scp: iteration caps must be >= 1");
  if (!(fd_step > 0.0)) throw std::invalid_argument("scp: fd_step must be positive");
}

DecisionVector clamp_to_limits(DecisionVector u, const Limits& limits) {
  for (Eigen::Index i = 0; i + 1 < u.size(); i += 2) {
    u[i] = std::clamp(u[i], limits.omega_min, limits.omega_max);
    u[i + 1] = std::clamp(u[i + 1], limits.accel_min, limits.accel_max);
  }
  return u;
}

DecisionVector shift_warm_start(const DecisionVector& prev) {
  DecisionVector out = prev;
  const Eigen::Index n = prev.size();
  if (n < 4) return out;
  out.head(n - 2) = prev.tail(n - 2);
  out.tail(2) = prev.tail(2);
  return out;
}

PlanningContext::PlanningContext(std::span<const ConvexBody> obstacles_, const FovParams& fov_,
                                 const TargetModel& model, const SensorModel& sensor_, const NoiseCovs& noise_)
    : obstacles(obstacles_),
      fov(fov_),
      fov_local(fov_local_polygon(fov_)),
      target_model(model),
      sensor(sensor_),
      noise(noise_) {}

void PlanningContext::hold_target_input(const SmallVec& u, int horizon) {
  target_inputs.assign(static_cast<std::size_t>(horizon), u);
}

double StepGammas::min_lo() const { return lo.empty() ? 1.0 : *std::min_element(lo.begin(), lo.end()); }
double StepGammas::max_ro() const { return ro.empty() ? 0.0 : *std::max_element(ro.begin(), ro.end()); }

namespace {

constexpr double kMinLosLength = 1e-9;

StepSdfParams fresh_params(const StackedGaussian& g, const PlanningContext& ctx, std::span<const int> valid) {
  StepSdfParams p;
  p.lo.reserve(valid.size());
  p.ro.reserve(valid.size());
  const Vec2 xr = g.robot_mean.head<2>();
  p.degenerate = (xr - target_position(g.target_mean)).norm() < kMinLosLength;
  if (!p.degenerate) p.tf = tf_params(g, ctx.fov_local);
  for (int j : valid) {
    const ConvexBody& o = ctx.obstacles[static_cast<std::size_t>(j)];
    p.lo.push_back(p.degenerate ? SdfParams{} : lo_params(g, o));
    p.ro.push_back(ro_params(g, o));
  }
  return p;
}

}  // namespace

RolloutResult rollout(const DecisionVector& u, const RobotBelief& rb0, const TargetBelief& tb0,
                      const PlanningContext& ctx, const PlannerConfig& cfg, std::span<const int> valid,
                      const SdfParamSet* frozen) {
  const int n = cfg.horizon;
  if (u.size() != 2 * n) throw std::invalid_argument("rollout: control vector has the wrong length");
  if (static_cast<int>(ctx.target_inputs.size()) < n) throw std::invalid_argument("rollout: missing target inputs");
  if (frozen && static_cast<int>(frozen->size()) < n) throw std::invalid_argument("rollout: frozen set too short");

  RolloutResult r;
  r.valid.assign(valid.begin(), valid.end());
  r.robot_beliefs.reserve(n);
  r.target_priors.reserve(n);
  r.target_beliefs.reserve(n);
  r.gammas.reserve(n);
  r.params.reserve(n);

  RobotBelief rb = rb0;
  TargetBelief tb = tb0;
  for (int i = 0; i < n; ++i) {
    rb = propagate_robot_belief(rb, control_at(u, i), ctx.noise, cfg.dt);
    const TargetBelief prior = ekf_predict(tb, ctx.target_model, ctx.target_inputs[i], ctx.noise, cfg.dt);
    const StackedGaussian g = StackedGaussian::from(rb, prior);

    StepSdfParams params = frozen ? (*frozen)[i] : fresh_params(g, ctx, valid);
    const bool degenerate = (rb.mean.position - target_position(prior.mean)).norm() < kMinLosLength;

    StepGammas gm;
    gm.lo.reserve(valid.size());
    gm.ro.reserve(valid.size());
    gm.tf = degenerate ? 0.0 : tf_prob(params.tf, g, cfg.relax_tf);
    gm.tf_distance = degenerate ? 0.0 : linearize_sdf(params.tf, g).value;
    for (std::size_t j = 0; j < valid.size(); ++j) {
      gm.lo.push_back(degenerate ? 0.0 : lo_prob(params.lo[j], g, cfg.relax_lo));
      gm.ro.push_back(ro_prob(params.ro[j], g));
    }
    gm.gamma = bpod(gm.tf, gm.lo);

    tb = prior;
    if (!degenerate && gm.gamma > 0.0) {
      const SmallMat c = measurement_jacobian(ctx.sensor, prior.mean, rb.mean);
      tb.cov = bpod_covariance_update(prior.cov, c, ctx.sensor.noise_cov, gm.gamma);
    }

    r.robot_beliefs.push_back(rb);
    r.target_priors.push_back(prior);
    r.target_beliefs.push_back(tb);
    r.gammas.push_back(std::move(gm));
    r.params.push_back(std::move(params));
  }
  return r;
}

double objective(const RolloutResult& r, Objective kind) {
  double j = 0.0;
  if (kind == Objective::CumulativeEntropy) {
    for (const auto& tb : r.target_beliefs) j += belief_entropy(tb.cov, tb.dim());
  } else if (kind == Objective::NegCumulativeBpod) {
    for (const auto& g : r.gammas) j -= g.gamma;
  } else {
    for (const auto& g : r.gammas) j += g.tf_distance;
  }
  return j;
}

Eigen::VectorXd constraint_values(const RolloutResult& r, const PlannerConfig& cfg) {
  Eigen::Index n = 2 * static_cast<Eigen::Index>(r.robot_beliefs.size());
  for (const auto& g : r.gammas) n += static_cast<Eigen::Index>(g.ro.size());
  Eigen::VectorXd v(n);
  Eigen::Index k = 0;
  for (const auto& g : r.gammas) {
    for (double ro : g.ro) v[k++] = ro - cfg.delta_s;
  }
  for (const auto& rb : r.robot_beliefs) {
    v[k++] = rb.mean.speed - cfg.limits.speed_max;
    v[k++] = cfg.limits.speed_min - rb.mean.speed;
  }
  return v;
}

double constraint_violations(const RolloutResult& r, const PlannerConfig& cfg) {
  return constraint_values(r, cfg).cwiseMax(0.0).sum();
}

PenaltyValue penalty_objective(const RolloutResult& r, double eta, const PlannerConfig& cfg) {
  const double viol = constraint_violations(r, cfg);
  return {objective(r, cfg.objective) + eta * viol, viol};
}

std::vector<int> valid_obstacles(std::span<const ConvexBody> obstacles, const Vec2& robot, const Vec2& target,
                                 double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("valid_obstacles: radius must be positive");
  const bool point_los = (robot - target).norm() < kMinLosLength;
  const ConvexBody los = point_los ? ConvexBody::point(robot) : ConvexBody::segment(target, robot);
  std::vector<int> out;
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    if (signed_distance(los, obstacles[i]).signed_distance <= radius) out.push_back(static_cast<int>(i));
  }
  return out;
}

}  // namespace vistrack
