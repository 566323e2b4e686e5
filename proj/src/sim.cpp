#include "vistrack/sim.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "vistrack/rng.hpp"

namespace vistrack {

namespace {

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal();
}

Eigen::VectorXd gaussian(const Eigen::MatrixXd& root, CounterRng& rng) {
  Eigen::VectorXd xi(root.cols());
  for (Eigen::Index i = 0; i < xi.size(); ++i) xi[i] = rng.normal();
  return root * xi;
}

/// Control the true target applies at step k: the reference control plus a
/// proportional pull back toward the reference state. A unicycle target never
/// exceeds `v_cap`.
SmallVec true_target_control(const TargetModel& model, const SmallVec& x, const SmallVec& ref_k,
                             const SmallVec& ref_next, const SmallVec& u_ref, double gain, double v_cap,
                             double dt) {
  if (model.kind == TargetKind::LinearIntegrator) return u_ref + gain * (ref_k - x) / dt;
  const Vec2 delta = (target_position(ref_next) - target_position(ref_k)) -
                     gain * (target_position(x) - target_position(ref_k));
  SmallVec u(2);
  if (delta.norm() < 1e-12) {
    u << 0.0, 0.0;
    return u;
  }
  const Vec2 h(std::cos(x[2]), std::sin(x[2]));
  u << std::clamp(delta.dot(h) / dt, 0.0, v_cap), wrap_angle(std::atan2(delta.y(), delta.x()) - x[2]) / dt;
  return u;
}

}  // namespace

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::Success:
      return "success";
    case Outcome::Collision:
      return "collision";
    case Outcome::Lost:
      return "lost";
    case Outcome::SolverFailure:
      return "solver_failure";
  }
  return "unknown";
}

EpisodeLog run_episode(const Scenario& s, std::uint64_t seed, const EpisodeOptions& opts) {
  s.validate();
  const double dt = s.planner.dt;
  const TargetModel& model = s.target.model;
  const int d = model.state_dim();

  EpisodeLog log;
  log.seed = seed;
  log.target_dim = d;

  const std::vector<SmallVec> script = reference_controls(s, seed);
  double v_cap = 0.0;
  double w_cap = 0.0;
  for (const auto& u : script) {
    v_cap = std::max(v_cap, std::abs(u[0]));
    if (u.size() > 1) w_cap = std::max(w_cap, std::abs(u[1]));
  }
  std::vector<SmallVec> ref{s.target.init};
  ref.reserve(script.size() + 1);
  for (const auto& u : script) ref.push_back(target_step(model, ref.back(), u, dt));

  CounterRng robot_rng = make_stream(seed, Stream::RobotNoise);
  CounterRng target_rng = make_stream(seed, Stream::TargetNoise);
  CounterRng sensor_rng = make_stream(seed, Stream::SensorNoise);
  CounterRng prior_rng = make_stream(seed, Stream::TargetPrior);
  const Eigen::MatrixXd robot_root = psd_sqrt(s.noise.robot);
  const Eigen::MatrixXd target_root = psd_sqrt(s.noise.target);
  const Eigen::MatrixXd sensor_root = psd_sqrt(s.sensor.noise_cov);

  RobotState robot = s.robot_init;
  SmallVec target = s.target.init;

  TargetBelief posterior;
  posterior.mean = target;
  for (int i = 0; i < d; ++i) posterior.mean[i] += std::sqrt(s.target.prior_mean_var) * prior_rng.normal();
  if (model.heading_index() >= 0) posterior.mean[2] = wrap_angle(posterior.mean[2]);
  posterior.cov = s.target.prior_cov * SmallMat::Identity(d, d);
  // Initial detection, if any, before the first plan.
  if (exact_visibility(robot.pose(), target_position(target), s.obstacles, s.fov)) {
    SmallVec m = measure(s.sensor, target, robot) + gaussian(sensor_root, sensor_rng);
    for (int i = 0; i < s.sensor.dim(); ++i) {
      if (SensorModel::is_angular(i)) m[i] = wrap_angle(m[i]);
    }
    posterior = ekf_update(posterior, m, s.sensor, robot);
  }
  SmallVec previous_mean = posterior.mean;

  PlanningContext ctx(s.obstacles, s.fov, model, s.sensor, s.noise);
  std::optional<DecisionVector> warm;
  int lost_run = 0;

  for (int k = 0; k < s.episode.max_steps; ++k) {
    StepRecord rec;
    rec.step = k + 1;

    // Known control for the linear target; differentiated estimates otherwise.
    const bool scripted = k < static_cast<int>(script.size());
    const SmallVec u_ref = scripted ? script[static_cast<std::size_t>(k)] : SmallVec::Zero(model.input_dim());
    const SmallVec& ref_k = ref[std::min<std::size_t>(static_cast<std::size_t>(k), ref.size() - 1)];
    const SmallVec& ref_next = ref[std::min<std::size_t>(static_cast<std::size_t>(k) + 1, ref.size() - 1)];
    const SmallVec u_true =
        true_target_control(model, target, ref_k, ref_next, u_ref, s.target.tracking_gain, v_cap, dt);
    SmallVec u_assumed = model.kind == TargetKind::LinearIntegrator
                             ? u_true
                             : estimate_target_control(previous_mean, posterior.mean, dt);
    // A correction after occlusion is not motion; the reference limits are known.
    if (model.kind != TargetKind::LinearIntegrator && v_cap > 0.0) {
      u_assumed[0] = std::min(u_assumed[0], v_cap);
      u_assumed[1] = std::clamp(u_assumed[1], -w_cap, w_cap);
    }
    ctx.hold_target_input(u_assumed, s.planner.horizon);

    RobotBelief rb0;
    rb0.mean = robot;
    rb0.cov = Mat4::Zero();
    ScpResult plan;
    try {
      const auto t0 = std::chrono::steady_clock::now();
      plan = scp_solve(rb0, posterior, ctx, s.planner, s.scp, warm);
      const auto t1 = std::chrono::steady_clock::now();
      if (opts.record_timing) rec.solve_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    } catch (const std::exception& e) {
      log.outcome = Outcome::SolverFailure;
      log.message = "step " + std::to_string(rec.step) + ": " + e.what();
      break;
    }
    if (opts.on_plan) opts.on_plan(rec.step, rb0, posterior, ctx, plan);
    warm = shift_warm_start(plan.controls);
    const StepGammas& g0 = plan.rollout.gammas.front();
    rec.plan_robot = plan.rollout.robot_beliefs.front();
    rec.plan_target = plan.rollout.target_priors.front();
    rec.valid = plan.rollout.valid;
    rec.gamma = g0.gamma;
    rec.gamma_tf = g0.tf;
    rec.min_gamma_lo = g0.min_lo();
    rec.max_gamma_ro = g0.max_ro();
    rec.scp_outer = plan.diagnostics.outer_iterations;
    rec.scp_inner = plan.diagnostics.inner_iterations;

    // Execute the first control.
    const Vec4 zr = robot_step(robot, control_at(plan.controls, 0), dt).vec() + gaussian(robot_root, robot_rng);
    robot = RobotState(zr[0], zr[1], wrap_angle(zr[2]),
                       std::clamp(zr[3], s.planner.limits.speed_min, s.planner.limits.speed_max));
    target = target_step(model, target, u_true, dt) + gaussian(target_root, target_rng);
    if (model.heading_index() >= 0) target[2] = wrap_angle(target[2]);

    // Sense.
    rec.mu = exact_visibility(robot.pose(), target_position(target), s.obstacles, s.fov);
    std::optional<SmallVec> y;
    if (rec.mu) {
      SmallVec m = measure(s.sensor, target, robot) + gaussian(sensor_root, sensor_rng);
      for (int i = 0; i < s.sensor.dim(); ++i) {
        if (SensorModel::is_angular(i)) m[i] = wrap_angle(m[i]);
      }
      y = m;
    }

    // Estimate.
    const TargetBelief predicted = ekf_predict(posterior, model, u_assumed, s.noise, dt);
    previous_mean = posterior.mean;
    try {
      posterior = ekf_update(predicted, y, s.sensor, robot);
    } catch (const std::exception& e) {
      log.outcome = Outcome::SolverFailure;
      log.message = "step " + std::to_string(rec.step) + ": " + e.what();
      break;
    }

    rec.robot_true = robot;
    rec.target_true = target;
    rec.estimate = posterior;
    rec.est_error = (target_position(posterior.mean) - target_position(target)).norm();
    rec.d_min = min_obstacle_distance(robot.position, s.obstacles);
    log.steps.push_back(std::move(rec));

    const bool collided = std::any_of(s.obstacles.begin(), s.obstacles.end(),
                                      [&](const ConvexBody& o) { return o.contains_strict(robot.position); });
    if (collided) {
      log.outcome = Outcome::Collision;
      log.message = "collision at step " + std::to_string(k + 1);
      break;
    }
    lost_run = log.steps.back().mu ? 0 : lost_run + 1;
    if (lost_run >= s.episode.loss_limit) {
      log.outcome = Outcome::Lost;
      log.message = "target lost at step " + std::to_string(k + 1);
      break;
    }
  }
  return log;
}

Metrics compute_metrics(const EpisodeLog& log) {
  Metrics m;
  m.outcome = log.outcome;
  m.steps = static_cast<int>(log.steps.size());
  if (log.steps.empty()) return m;
  double t = 0.0;
  double e = 0.0;
  int visible = 0;
  m.d_min = std::numeric_limits<double>::infinity();
  for (const auto& r : log.steps) {
    t += r.solve_ms * 1e-3;
    e += r.est_error;
    visible += r.mu ? 1 : 0;
    m.d_min = std::min(m.d_min, r.d_min);
  }
  const double n = static_cast<double>(log.steps.size());
  m.t_cal = t / n;
  m.e_est = e / n;
  m.r_vis = visible / n;
  return m;
}

BatchResult run_batch(const Scenario& s, const std::vector<std::uint64_t>& seeds, int threads,
                      const EpisodeOptions& opts) {
  BatchResult out;
  out.logs.resize(seeds.size());
  out.metrics.resize(seeds.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(seeds.size());
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        out.logs[i] = run_episode(s, seeds[i], opts);
        out.metrics[i] = compute_metrics(out.logs[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(seeds.size())));
  std::vector<std::thread> pool;
  for (int i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

Aggregate aggregate(const std::vector<double>& xs) {
  Aggregate a;
  if (xs.empty()) return a;
  for (double x : xs) a.mean += x;
  a.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - a.mean) * (x - a.mean);
    a.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return a;
}

}  // namespace vistrack
