#include <algorithm>
#include <cmath>
#include <set>

#include "vistrack/lp.hpp"
#include "vistrack/planner.hpp"

namespace vistrack {

Eigen::VectorXd frozen_gradient(const DecisionVector& x, const RobotBelief& rb0, const TargetBelief& tb0,
                                const PlanningContext& ctx, const PlannerConfig& cfg, std::span<const int> valid,
                                const SdfParamSet& frozen, double eta, double h, int* rollouts) {
  Eigen::VectorXd g(x.size());
  DecisionVector probe = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    probe[j] = x[j] + h;
    const double up = penalty_objective(rollout(probe, rb0, tb0, ctx, cfg, valid, &frozen), eta, cfg).jm;
    probe[j] = x[j] - h;
    const double down = penalty_objective(rollout(probe, rb0, tb0, ctx, cfg, valid, &frozen), eta, cfg).jm;
    probe[j] = x[j];
    g[j] = (up - down) / (2.0 * h);
  }
  if (rollouts) *rollouts += static_cast<int>(2 * x.size());
  return g;
}

FrozenLinearization frozen_linearization(const DecisionVector& x, const RobotBelief& rb0, const TargetBelief& tb0,
                                         const PlanningContext& ctx, const PlannerConfig& cfg,
                                         std::span<const int> valid, const SdfParamSet& frozen, double h,
                                         int* rollouts) {
  FrozenLinearization lin;
  const RolloutResult base = rollout(x, rb0, tb0, ctx, cfg, valid, &frozen);
  lin.j = objective(base, cfg.objective);
  lin.g = constraint_values(base, cfg);
  lin.grad.resize(x.size());
  lin.jacobian.resize(lin.g.size(), x.size());
  DecisionVector probe = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    probe[j] = x[j] + h;
    const RolloutResult up = rollout(probe, rb0, tb0, ctx, cfg, valid, &frozen);
    probe[j] = x[j] - h;
    const RolloutResult down = rollout(probe, rb0, tb0, ctx, cfg, valid, &frozen);
    probe[j] = x[j];
    lin.grad[j] = (objective(up, cfg.objective) - objective(down, cfg.objective)) / (2.0 * h);
    lin.jacobian.col(j) = (constraint_values(up, cfg) - constraint_values(down, cfg)) / (2.0 * h);
  }
  if (rollouts) *rollouts += static_cast<int>(2 * x.size() + 1);
  return lin;
}

namespace {

// Below this detection probability on every horizon step the probabilistic
// objectives are numerically flat.
constexpr double kRecoveryGamma = 1e-6;
// A start with no model decrease and detection below this also falls back.
constexpr double kRecoveryCeiling = 0.5;

// Obstacles near any mean line of sight the initial guess passes through.
std::vector<int> horizon_valid_set(const DecisionVector& x, const RobotBelief& rb0, const TargetBelief& tb0,
                                   const PlanningContext& ctx, const PlannerConfig& cfg) {
  std::set<int> all;
  RobotState zr = rb0.mean;
  SmallVec zt = tb0.mean;
  auto add = [&](const Vec2& r, const Vec2& t) {
    for (int j : valid_obstacles(ctx.obstacles, r, t, cfg.valid_obstacle_radius)) all.insert(j);
  };
  add(zr.position, target_position(zt));
  for (int i = 0; i < cfg.horizon; ++i) {
    zr = robot_step(zr, control_at(x, i), cfg.dt);
    zt = target_step(ctx.target_model, zt, ctx.target_inputs[i], cfg.dt);
    add(zr.position, target_position(zt));
  }
  return {all.begin(), all.end()};
}

// Controls held constant over the horizon on a grid over the limits; the
// warm start is replaced by the best of these when it is worse.
std::vector<DecisionVector> constant_control_seeds(const Limits& limits, int horizon, int per_axis) {
  std::vector<DecisionVector> out;
  if (per_axis < 2) return out;
  auto level = [per_axis](double lo, double hi, int i) {
    // Split at zero so the grid always contains the zero control.
    const double t = static_cast<double>(i) / (per_axis - 1);
    return t < 0.5 ? lo * (1.0 - 2.0 * t) : hi * (2.0 * t - 1.0);
  };
  for (int i = 0; i < per_axis; ++i) {
    for (int j = 0; j < per_axis; ++j) {
      DecisionVector x(2 * horizon);
      for (int k = 0; k < horizon; ++k) {
        x[2 * k] = level(limits.omega_min, limits.omega_max, i);
        x[2 * k + 1] = level(limits.accel_min, limits.accel_max, j);
      }
      out.push_back(x);
    }
  }
  return out;
}

}  // namespace

ScpResult scp_solve(const RobotBelief& rb0, const TargetBelief& tb0, const PlanningContext& ctx,
                    const PlannerConfig& cfg, const ScpParams& scp, const std::optional<DecisionVector>& warm) {
  const int dim = 2 * cfg.horizon;
  for (const auto& o : ctx.obstacles) {
    if (o.contains_strict(rb0.mean.position, 0.0)) {
      throw SolverError("scp_solve: initial robot mean lies inside an obstacle");
    }
  }

  DecisionVector x0 = DecisionVector::Zero(dim);
  if (warm) {
    if (warm->size() != dim) throw std::invalid_argument("scp_solve: warm start has the wrong length");
    x0 = clamp_to_limits(*warm, cfg.limits);
  }
  Eigen::VectorXd lower(dim), upper(dim);
  for (int i = 0; i < cfg.horizon; ++i) {
    lower[2 * i] = cfg.limits.omega_min;
    upper[2 * i] = cfg.limits.omega_max;
    lower[2 * i + 1] = cfg.limits.accel_min;
    upper[2 * i + 1] = cfg.limits.accel_max;
  }

  PlannerConfig active = cfg;
  ScpResult out;
  ScpDiagnostics& diag = out.diagnostics;
  std::vector<int> valid = horizon_valid_set(x0, rb0, tb0, ctx, cfg);
  const auto seeds = constant_control_seeds(cfg.limits, cfg.horizon, scp.seed_levels);
  if (!seeds.empty()) {
    std::set<int> all(valid.begin(), valid.end());
    for (const auto& x : seeds) {
      for (int j : horizon_valid_set(x, rb0, tb0, ctx, cfg)) all.insert(j);
    }
    valid.assign(all.begin(), all.end());
  }

  RolloutResult r0 = rollout(x0, rb0, tb0, ctx, active, valid);
  ++diag.rollouts;
  ++diag.param_refreshes;
  {
    double best = penalty_objective(r0, scp.eta0, active).jm;
    for (const auto& x : seeds) {
      RolloutResult r = rollout(x, rb0, tb0, ctx, active, valid);
      ++diag.rollouts;
      const double j = penalty_objective(r, scp.eta0, active).jm;
      if (j < best) {
        best = j;
        x0 = x;
        r0 = std::move(r);
      }
    }
  }
  auto best_gamma = [](const RolloutResult& r) {
    double best = 0.0;
    for (const auto& g : r.gammas) best = std::max(best, g.gamma);
    return best;
  };
  if (cfg.objective != Objective::FovDistance && best_gamma(r0) < kRecoveryGamma) {
    active.objective = Objective::FovDistance;
    diag.recovery = true;
  }
  double eta = scp.eta0;
  double trust = scp.d0;

  for (int outer = 0; outer < scp.max_outer; ++outer) {
    ++diag.outer_iterations;
    double j0 = penalty_objective(r0, eta, active).jm;
    for (int inner = 0; inner < scp.max_inner; ++inner) {
      ++diag.inner_iterations;
      const FrozenLinearization lin =
          frozen_linearization(x0, rb0, tb0, ctx, active, valid, r0.params, scp.fd_step, &diag.rollouts);
      if (!lin.grad.allFinite() || !lin.jacobian.allFinite()) {
        diag.message = "non-finite gradient";
        throw SolverError("scp_solve: non-finite gradient of the penalized objective");
      }

      // Convex model over the box (trust region intersected with the limits):
      // linearized objective plus l1 penalties of the linearized constraints.
      const Eigen::VectorXd lo = (lower - x0).cwiseMax(-trust).cwiseMin(0.0);
      const Eigen::VectorXd hi = (upper - x0).cwiseMin(trust).cwiseMax(0.0);
      const Eigen::VectorXd step = solve_hinge_box(lin.grad, lin.g, lin.jacobian, eta, lo, hi);
      const DecisionVector xs = clamp_to_limits(x0 + step, active.limits);
      const double predicted = hinge_model(lin.grad, lin.g, lin.jacobian, eta, Eigen::VectorXd::Zero(dim)) -
                               hinge_model(lin.grad, lin.g, lin.jacobian, eta, step);
      if (step.norm() <= scp.tau_c || std::abs(predicted) <= scp.tau_f) {
        // A flat start with poor visibility: the probabilistic objective has
        // vanished, so steer the FOV toward the target mean instead.
        if (!diag.recovery && diag.steps.empty() && active.objective != Objective::FovDistance &&
            best_gamma(r0) < kRecoveryCeiling) {
          active.objective = Objective::FovDistance;
          diag.recovery = true;
          j0 = penalty_objective(r0, eta, active).jm;
          continue;
        }
        break;
      }

      RolloutResult rs = rollout(xs, rb0, tb0, ctx, active, valid);
      ++diag.rollouts;
      ++diag.param_refreshes;
      const double js = penalty_objective(rs, eta, active).jm;
      const double actual = j0 - js;
      const double ratio = actual / predicted;

      TrustStep ts{outer, eta, trust, predicted, actual, ratio, ratio >= scp.ratio_accept};
      diag.steps.push_back(ts);
      if (ts.accepted) {
        x0 = xs;
        r0 = std::move(rs);
        j0 = js;
        trust *= scp.trust_expand;
      } else {
        trust *= scp.trust_shrink;
      }
    }

    const double viol = constraint_violations(r0, active);
    diag.violation_history.push_back(viol);
    diag.final_violation = viol;
    if (viol <= scp.tau_p) {
      diag.constraints_met = true;
      break;
    }
    eta *= scp.beta;
    trust = std::max(trust, scp.d0);
  }
  diag.final_eta = eta;
  if (!diag.constraints_met) diag.message = "max outer iterations reached with constraint violation";

  out.controls = x0;
  out.rollout = std::move(r0);
  return out;
}

}  // namespace vistrack
