#include "vistrack/report.hpp"

#include <Eigen/LU>

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace vistrack {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

void put(std::ostream& out, double x) { out << ',' << format_double(x); }

const char* kAxis[] = {"x", "y", "heading"};

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) parts.push_back(cur);
  if (!line.empty() && line.back() == sep) parts.emplace_back();
  return parts;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    if (s == "nan") return std::nan("");
    throw ConfigError("beliefs csv: bad number '" + s + "'");
  }
  return v;
}

}  // namespace

void write_step_csv(std::ostream& out, const EpisodeLog& log) {
  out << "step,robot_x,robot_y,robot_heading,robot_speed";
  for (int i = 0; i < log.target_dim; ++i) out << ",target_" << kAxis[i];
  for (int i = 0; i < log.target_dim; ++i) out << ",est_" << kAxis[i];
  out << ",cov_det,mu,gamma,gamma_tf,min_gamma_lo,max_gamma_ro,solve_ms,d_min\n";
  for (const auto& r : log.steps) {
    out << r.step;
    const Vec4 z = r.robot_true.vec();
    for (int i = 0; i < 4; ++i) put(out, z[i]);
    for (int i = 0; i < log.target_dim; ++i) put(out, r.target_true[i]);
    for (int i = 0; i < log.target_dim; ++i) put(out, r.estimate.mean[i]);
    put(out, r.estimate.cov.determinant());
    out << ',' << (r.mu ? 1 : 0);
    put(out, r.gamma);
    put(out, r.gamma_tf);
    put(out, r.min_gamma_lo);
    put(out, r.max_gamma_ro);
    put(out, r.solve_ms);
    put(out, r.d_min);
    out << '\n';
  }
}

void write_beliefs_csv(std::ostream& out, const EpisodeLog& log) {
  const int d = log.target_dim;
  out << "step,target_dim";
  for (int i = 0; i < 4; ++i) out << ",robot_mean" << i;
  for (int i = 0; i < 16; ++i) out << ",robot_cov" << i;
  for (int i = 0; i < d; ++i) out << ",target_mean" << i;
  for (int i = 0; i < d * d; ++i) out << ",target_cov" << i;
  out << ",valid,gamma_tf,gamma\n";
  for (const auto& r : log.steps) {
    out << r.step << ',' << d;
    const Vec4 z = r.plan_robot.mean.vec();
    for (int i = 0; i < 4; ++i) put(out, z[i]);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) put(out, r.plan_robot.cov(i, j));
    for (int i = 0; i < d; ++i) put(out, r.plan_target.mean[i]);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) put(out, r.plan_target.cov(i, j));
    out << ',';
    for (std::size_t i = 0; i < r.valid.size(); ++i) out << (i ? ";" : "") << r.valid[i];
    put(out, r.gamma_tf);
    put(out, r.gamma);
    out << '\n';
  }
}

std::vector<LoggedBelief> read_beliefs_csv(std::istream& in) {
  std::vector<LoggedBelief> rows;
  std::string line;
  if (!std::getline(in, line) || line.rfind("step,target_dim", 0) != 0) {
    throw ConfigError("beliefs csv: missing header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() < 2) throw ConfigError("beliefs csv: short row");
    const int d = std::stoi(f[1]);
    if (d != 2 && d != 3) throw ConfigError("beliefs csv: bad target dimension");
    const std::size_t expected = 2 + 4 + 16 + static_cast<std::size_t>(d + d * d) + 3;
    if (f.size() != expected) throw ConfigError("beliefs csv: wrong column count");
    LoggedBelief b;
    b.step = std::stoi(f[0]);
    std::size_t c = 2;
    Vec4 z;
    for (int i = 0; i < 4; ++i) z[i] = parse_double(f[c++]);
    b.robot.mean = RobotState::from_vec(z);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) b.robot.cov(i, j) = parse_double(f[c++]);
    b.target.mean = SmallVec(d);
    b.target.cov = SmallMat(d, d);
    for (int i = 0; i < d; ++i) b.target.mean[i] = parse_double(f[c++]);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) b.target.cov(i, j) = parse_double(f[c++]);
    if (!f[c].empty()) {
      for (const auto& v : split(f[c], ';')) b.valid.push_back(std::stoi(v));
    }
    ++c;
    b.gamma_tf = parse_double(f[c++]);
    b.gamma = parse_double(f[c++]);
    rows.push_back(std::move(b));
  }
  return rows;
}

std::string summary_json(const std::string& scenario_name, const std::vector<std::uint64_t>& seeds,
                         const std::vector<Metrics>& metrics, const std::vector<EpisodeLog>& logs) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["scenario"] = scenario_name;
  ordered_json eps = ordered_json::array();
  std::vector<double> t, e, v, dm;
  int successes = 0;
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    const Metrics& m = metrics[i];
    ordered_json row;
    row["seed"] = seeds[i];
    row["outcome"] = to_string(m.outcome);
    row["steps"] = m.steps;
    row["t_cal"] = m.t_cal;
    row["e_est"] = m.e_est;
    row["r_vis"] = m.r_vis;
    row["d_min"] = m.d_min;
    if (i < logs.size() && !logs[i].message.empty()) row["message"] = logs[i].message;
    eps.push_back(row);
    t.push_back(m.t_cal);
    e.push_back(m.e_est);
    v.push_back(m.r_vis);
    dm.push_back(m.d_min);
    successes += m.outcome == Outcome::Success ? 1 : 0;
  }
  j["episodes"] = eps;
  auto agg = [](const std::vector<double>& xs) {
    const Aggregate a = aggregate(xs);
    return ordered_json{{"mean", a.mean}, {"std", a.std}};
  };
  ordered_json a;
  a["count"] = metrics.size();
  a["success_rate"] = metrics.empty() ? 0.0 : static_cast<double>(successes) / static_cast<double>(metrics.size());
  a["t_cal"] = agg(t);
  a["e_est"] = agg(e);
  a["r_vis"] = agg(v);
  a["d_min"] = agg(dm);
  j["aggregate"] = a;
  return j.dump(2) + "\n";
}

}  // namespace vistrack
