// Command-line front end: closed-loop runs, BPOD checks, trajectory
// generation and micro-benchmarks.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "vistrack/report.hpp"
#include "vistrack/rng.hpp"
#include "vistrack/sim.hpp"

namespace fs = std::filesystem;
using namespace vistrack;

namespace {

constexpr int kExitFailedEpisode = 1;
constexpr int kExitConfig = 2;

struct RunArgs {
  std::string scenario;
  int seeds = 0;
  std::vector<std::uint64_t> seed_list;
  std::string objective;
  std::string out;
  int threads = 0;
  int max_steps = 0;
  double vmax = 0.0;
  bool no_timing = false;
  bool quiet = false;
};

int default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path.string() + "'");
  f << text;
}

int cmd_run(const RunArgs& a) {
  Scenario s = load_scenario(a.scenario);
  if (a.objective == "entropy") s.planner.objective = Objective::CumulativeEntropy;
  if (a.objective == "bpod") s.planner.objective = Objective::NegCumulativeBpod;
  if (a.max_steps > 0) s.episode.max_steps = a.max_steps;
  if (a.vmax > 0.0) {
    if (!s.target.generator) throw ConfigError("--vmax needs a scenario with a trajectory generator");
    s.target.generator->v_max = a.vmax;
  }
  std::vector<std::uint64_t> seeds = s.episode.seeds;
  if (!a.seed_list.empty()) {
    seeds = a.seed_list;
  } else if (a.seeds > 0) {
    seeds.clear();
    for (int i = 0; i < a.seeds; ++i) seeds.push_back(static_cast<std::uint64_t>(i));
  }
  s.validate();

  EpisodeOptions opts;
  opts.record_timing = !a.no_timing;
  const BatchResult batch = run_batch(s, seeds, a.threads > 0 ? a.threads : default_threads(), opts);
  const std::string summary = summary_json(s.name, seeds, batch.metrics, batch.logs);

  if (!a.out.empty()) {
    fs::create_directories(a.out);
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      std::ostringstream steps, beliefs;
      write_step_csv(steps, batch.logs[i]);
      write_beliefs_csv(beliefs, batch.logs[i]);
      write_file(fs::path(a.out) / ("episode_" + std::to_string(seeds[i]) + ".csv"), steps.str());
      write_file(fs::path(a.out) / ("beliefs_" + std::to_string(seeds[i]) + ".csv"), beliefs.str());
    }
    write_file(fs::path(a.out) / "summary.json", summary);
  }
  if (!a.quiet) std::cout << summary;

  const bool all_ok = std::all_of(batch.metrics.begin(), batch.metrics.end(),
                                  [](const Metrics& m) { return m.outcome == Outcome::Success; });
  return all_ok ? 0 : kExitFailedEpisode;
}

struct CheckArgs {
  std::string scenario;
  int samples = 100000;
  std::vector<std::string> states;
  int limit = 0;
  double relax_tf = 0.0;
  double relax_lo = 0.0;
  std::uint64_t seed = 1;
};

int cmd_bpod_check(const CheckArgs& a) {
  const Scenario s = load_scenario(a.scenario);
  std::vector<LoggedBelief> rows;
  for (const auto& p : a.states) {
    std::vector<fs::path> files;
    if (fs::is_directory(p)) {
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.path().filename().string().rfind("beliefs_", 0) == 0) files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
    } else {
      files.push_back(p);
    }
    for (const auto& f : files) {
      std::ifstream in(f);
      if (!in) throw ConfigError("cannot open '" + f.string() + "'");
      auto r = read_beliefs_csv(in);
      rows.insert(rows.end(), r.begin(), r.end());
    }
  }
  if (a.limit > 0 && static_cast<int>(rows.size()) > a.limit) rows.resize(static_cast<std::size_t>(a.limit));
  if (rows.empty()) throw ConfigError("no belief states to check");

  double abs_sum = 0.0;
  double abs_max = 0.0;
  std::vector<double> times;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& b = rows[i];
    const auto t0 = std::chrono::steady_clock::now();
    const double g = bpod_for(b.robot, b.target, s.obstacles, s.fov, a.relax_tf, a.relax_lo);
    const auto t1 = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    const McEstimate mc = mc_bpod_oracle(b.robot, b.target, s.obstacles, s.fov, a.samples, derive_key(a.seed, i));
    const double err = std::abs(g - mc.estimate);
    abs_sum += err;
    abs_max = std::max(abs_max, err);
  }
  std::nth_element(times.begin(), times.begin() + static_cast<long>(times.size() / 2), times.end());
  std::printf("states %zu\nsamples %d\nmae %.6g\nmax_abs_error %.6g\nmedian_bpod_ms %.6g\n", rows.size(), a.samples,
              abs_sum / static_cast<double>(rows.size()), abs_max, times[times.size() / 2]);
  return 0;
}

struct GenArgs {
  double vmax = 1.0;
  int count = 50;
  int steps = 400;
  std::uint64_t seed = 0;
  std::string scenario;
  std::string out;
};

int cmd_gen(const GenArgs& a) {
  Scenario s = load_scenario(a.scenario);
  TrajectoryGenerator gen = s.target.generator.value_or(TrajectoryGenerator{});
  gen.v_max = a.vmax;
  gen.steps = a.steps;
  SmallVec init = s.target.init;
  if (init.size() != 3) {
    SmallVec z(3);
    z << init[0], init[1], 0.0;
    init = z;
  }
  const TargetModel model{TargetKind::Unicycle};
  if (!a.out.empty()) fs::create_directories(a.out);
  for (int i = 0; i < a.count; ++i) {
    gen.seed = derive_key(a.seed, static_cast<std::uint64_t>(Stream::Trajectory), static_cast<std::uint64_t>(i));
    const auto controls = generate_target_trajectory(s.width, s.height, s.obstacles, init, gen, s.planner.dt);
    std::ostringstream csv;
    csv << "step,v,omega,x,y,heading\n";
    SmallVec z = init;
    double clearance = std::numeric_limits<double>::infinity();
    double vmax = 0.0;
    for (std::size_t k = 0; k < controls.size(); ++k) {
      z = target_step(model, z, controls[k], s.planner.dt);
      clearance = std::min(clearance, min_obstacle_distance(target_position(z), s.obstacles));
      vmax = std::max(vmax, controls[k][0]);
      csv << k << ',' << format_double(controls[k][0]) << ',' << format_double(controls[k][1]) << ','
          << format_double(z[0]) << ',' << format_double(z[1]) << ',' << format_double(z[2]) << '\n';
    }
    if (!a.out.empty()) write_file(fs::path(a.out) / ("trajectory_" + std::to_string(i) + ".csv"), csv.str());
    std::printf("trajectory %d steps %zu max_speed %.4f min_clearance %.4f\n", i, controls.size(), vmax, clearance);
  }
  return 0;
}

template <typename F>
double median_ms(int reps, F&& f) {
  std::vector<double> t;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const auto t1 = std::chrono::steady_clock::now();
    t.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::nth_element(t.begin(), t.begin() + static_cast<long>(t.size() / 2), t.end());
  return t[t.size() / 2];
}

int cmd_bench(const std::string& scenario_path, int reps) {
  const Scenario s = load_scenario(scenario_path);
  RobotBelief rb;
  rb.mean = s.robot_init;
  rb.cov = s.noise.robot;
  TargetBelief tb;
  tb.mean = s.target.init;
  tb.cov = 0.1 * SmallMat::Identity(tb.mean.size(), tb.mean.size());
  const std::vector<int> all = [&] {
    std::vector<int> v(s.obstacles.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<int>(i);
    return v;
  }();
  PlanningContext ctx(s.obstacles, s.fov, s.target.model, s.sensor, s.noise);
  ctx.hold_target_input(SmallVec::Zero(s.target.model.input_dim()), s.planner.horizon);
  const DecisionVector u = DecisionVector::Zero(2 * s.planner.horizon);
  const ConvexBody fov = convexify_fov(rb.mean.pose(), s.fov);
  volatile double sink = 0.0;

  std::printf("component median_ms\n");
  std::printf("signed_distance %.6f\n", median_ms(reps, [&] {
                for (const auto& o : s.obstacles) sink = sink + signed_distance(fov, o).signed_distance;
              }) / std::max<double>(1.0, static_cast<double>(s.obstacles.size())));
  std::printf("bpod_all_obstacles %.6f\n", median_ms(reps, [&] {
                sink = sink + bpod_for(rb, tb, s.obstacles, s.fov, s.planner.relax_tf, s.planner.relax_lo);
              }));
  std::printf("rollout_fresh %.6f\n", median_ms(reps, [&] {
                sink = sink + rollout(u, rb, tb, ctx, s.planner, all).gammas.back().gamma;
              }));
  const RolloutResult base = rollout(u, rb, tb, ctx, s.planner, all);
  std::printf("rollout_frozen %.6f\n", median_ms(reps, [&] {
                sink = sink + rollout(u, rb, tb, ctx, s.planner, all, &base.params).gammas.back().gamma;
              }));
  RobotBelief start = rb;
  start.cov = Mat4::Zero();
  std::printf("scp_solve %.6f\n", median_ms(std::max(1, reps / 100), [&] {
                sink = sink + scp_solve(start, tb, ctx, s.planner, s.scp, std::nullopt).controls[0];
              }));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Visibility-aware belief-space target tracking simulator"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run closed-loop episodes");
  run_cmd->add_option("--scenario", run.scenario, "Scenario JSON file")->required();
  auto* seeds_opt = run_cmd->add_option("--seeds", run.seeds, "Run seeds 0..N-1");
  run_cmd->add_option("--seed-list", run.seed_list, "Explicit seeds")->delimiter(',')->excludes(seeds_opt);
  run_cmd->add_option("--objective", run.objective, "Planner objective")
      ->check(CLI::IsMember({"entropy", "bpod"}));
  run_cmd->add_option("--out", run.out, "Output directory for CSV logs and summary.json");
  run_cmd->add_option("--threads", run.threads, "Worker threads (default: hardware concurrency)");
  run_cmd->add_option("--max-steps", run.max_steps, "Override the episode length");
  run_cmd->add_option("--vmax", run.vmax, "Override the generated target's maximum speed");
  run_cmd->add_flag("--no-timing", run.no_timing, "Record zero solve times for byte-reproducible logs");
  run_cmd->add_flag("--quiet", run.quiet, "Do not print the summary");

  CheckArgs check;
  auto* check_cmd = app.add_subcommand("bpod-check", "Compare BPOD against Monte Carlo on logged beliefs");
  check_cmd->add_option("--scenario", check.scenario, "Scenario JSON file")->required();
  check_cmd->add_option("--samples", check.samples, "Monte-Carlo samples per state")->check(CLI::Range(100, 100000000));
  check_cmd->add_option("--states", check.states, "beliefs_*.csv files or directories")->required();
  check_cmd->add_option("--limit", check.limit, "Check at most this many states");
  check_cmd->add_option("--relax-tf", check.relax_tf, "FOV relaxation (m)");
  check_cmd->add_option("--relax-lo", check.relax_lo, "Line-of-sight relaxation (m)");
  check_cmd->add_option("--seed", check.seed, "Monte-Carlo seed");

  GenArgs gen;
  gen.scenario = std::string(VISTRACK_SCENARIO_DIR) + "/case2.json";
  auto* gen_cmd = app.add_subcommand("gen-trajectories", "Generate random target trajectories");
  gen_cmd->add_option("--vmax", gen.vmax, "Maximum target speed (m/s)");
  gen_cmd->add_option("--count", gen.count, "Number of trajectories");
  gen_cmd->add_option("--steps", gen.steps, "Steps per trajectory");
  gen_cmd->add_option("--seed", gen.seed, "Generator seed");
  gen_cmd->add_option("--scenario", gen.scenario, "Map source");
  gen_cmd->add_option("--out", gen.out, "Output directory");

  std::string bench_scenario = std::string(VISTRACK_SCENARIO_DIR) + "/case1.json";
  int bench_reps = 1000;
  auto* bench_cmd = app.add_subcommand("bench", "Per-component timing");
  bench_cmd->add_option("--scenario", bench_scenario, "Scenario JSON file");
  bench_cmd->add_option("--reps", bench_reps, "Repetitions")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*check_cmd) return cmd_bpod_check(check);
    if (*gen_cmd) return cmd_gen(gen);
    if (*bench_cmd) return cmd_bench(bench_scenario, bench_reps);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailedEpisode;
  }
  return 0;
}
