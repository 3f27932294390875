// One PASS/FAIL line per acceptance criterion. Exit status is non-zero when
// any criterion fails.

#include <Eigen/Eigenvalues>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "opinion_nav/analysis.hpp"
#include "opinion_nav/experiments.hpp"
#include "opinion_nav/scenario_io.hpp"

using namespace opinion_nav;

namespace {

// Tolerances and budgets.
constexpr double kA1Budget = 1.0;
constexpr double kA2RootTol = 1e-8;
constexpr double kA2Kick = 1e-4;
constexpr std::size_t kA3Trials = 200;
constexpr double kA3MinSeparation = 0.3;
constexpr double kA3LeftLo = 0.35, kA3LeftHi = 0.65;
constexpr double kA3Budget = 30.0;
constexpr std::size_t kA4Seeds = 5;
constexpr double kA4UuBand = 0.05;
constexpr double kA4Budget = 60.0;
constexpr std::size_t kA6Seeds = 5;
constexpr std::size_t kA7Draws = 100;
constexpr double kA7MatchTol = 1e-8;
constexpr double kA7ZeroTol = 1e-9;
constexpr double kA8OrderRatio = 8.0;
constexpr double kA8MirrorTol = 1e-9;
constexpr std::size_t kA8FocalConfigs = 1000;

struct Verdict {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(const char* id, const char* title, const std::function<Verdict()>& check) {
  const auto start = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = check();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%s %s  %s  [%s] (%.2fs)\n", id, v.pass ? "PASS" : "FAIL", title, v.detail.c_str(), seconds);
  std::fflush(stdout);
  failures += v.pass ? 0 : 1;
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* pattern, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c, d);
  return buf;
}

// Independent scalar oracles.
double bisect_two_tanh() {
  double lo = 1.0, hi = 3.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (2 * std::tanh(mid) - mid > 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double march(double z, double d, double alpha, double u, double horizon) {
  for (double t = 0; t < horizon; t += 1e-3) z += 1e-3 * (-d * z + u * std::tanh(alpha * z));
  return z;
}

Eigen::Matrix4d oracle_jacobian(double d, double alpha, double gamma, double beta, double k, double u) {
  Eigen::Matrix4d j = Eigen::Matrix4d::Zero();
  j(0, 0) = j(1, 1) = -d + alpha * u;
  j(0, 3) = j(1, 2) = gamma * u;
  j(2, 0) = j(3, 1) = k * beta;
  j(2, 2) = j(3, 3) = -k;
  return j;
}

Verdict a1() {
  const auto t0 = std::chrono::steady_clock::now();
  const double u_crit = critical_attention(0.5, 0.1);
  const auto u = linspace(0.0, 10.0, 500);
  const auto diagram = pitchfork_diagram(0.5, 0.1, u, 0.0);
  const double step = u[1] - u[0];
  const double seconds = elapsed_since(t0);
  const bool ok = u_crit == 5.0 && diagram.u_star && std::abs(*diagram.u_star - 5.0) <= step && seconds < kA1Budget;
  return {ok, fmt("u*=%.17g u_star=%.6f grid step=%.6f", u_crit, diagram.u_star.value_or(NAN), step)};
}

Verdict a2() {
  const double z_star = bisect_two_tanh() / 0.1;
  const auto roots = equilibria_1d(0.1, 0.1, 2.0, 0.0);
  if (roots.size() != 3) return {false, "expected three roots"};
  const double err = std::max({std::abs(roots[0].z + z_star), std::abs(roots[1].z), std::abs(roots[2].z - z_star)});
  bool tags = true;
  for (const auto& r : roots) {
    for (double kick : {-kA2Kick, kA2Kick}) {
      const double drift = std::abs(march(r.z + kick, 0.1, 0.1, 2.0, 80.0) - r.z);
      tags = tags && (r.stable ? drift < kA2Kick : drift > kA2Kick);
    }
  }
  const bool pattern = roots[0].stable && !roots[1].stable && roots[2].stable;
  return {err < kA2RootTol && tags && pattern, fmt("z*=%.10f max root error=%.2e", z_star, err) +
                                                   (tags ? " stability confirmed" : " stability mismatch")};
}

Verdict a3() {
  const auto t0 = std::chrono::steady_clock::now();
  GridConfig config;
  config.betas = {kPi<double> / 4};
  config.cells = {GridCell{'U', 'U'}};
  config.runs = kA3Trials;
  const GridOutcome out = run_grid(head_on_scenario(), config, false);
  std::size_t reached = 0, collisions = 0, left = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& t : out.trials) {
    reached += t.result.outcome == Outcome::ReachedGoal;
    collisions += t.result.outcome == Outcome::Collision;
    left += t.result.metrics.passed_left[0];
    worst = std::min(worst, t.result.metrics.min_separation);
  }
  const double fraction = static_cast<double>(left) / static_cast<double>(kA3Trials);
  const double seconds = elapsed_since(t0);
  const bool ok = reached == kA3Trials && collisions == 0 && worst > kA3MinSeparation && fraction >= kA3LeftLo &&
                  fraction <= kA3LeftHi && seconds < kA3Budget;
  return {ok, fmt("reached %.0f/%.0f, min separation %.3f m, left fraction %.3f", static_cast<double>(reached),
                  static_cast<double>(kA3Trials), worst, fraction) +
                  fmt(", collisions %.0f", static_cast<double>(collisions))};
}

GridOutcome& full_grid() {
  static GridOutcome grid = [] {
    GridConfig config;
    config.betas = {kPi<double> / 6, kPi<double> / 4};
    config.runs = kA4Seeds;
    return run_grid(head_on_scenario(), config, false);
  }();
  return grid;
}

Verdict a4() {
  const auto t0 = std::chrono::steady_clock::now();
  const GridOutcome& grid = full_grid();
  const double seconds = elapsed_since(t0);
  const std::size_t cells = grid.rows.size() / 2;
  std::size_t longer = 0, curvier = 0, separation_ok = 0;
  double min_increase = std::numeric_limits<double>::infinity(), mean_increase = 0;
  std::string notes;
  for (std::size_t i = 0; i < cells; ++i) {
    const GridRow& small = grid.rows[i];
    const GridRow& large = grid.rows[i + cells];
    longer += large.mean_path_length > small.mean_path_length;
    curvier += large.mean_max_curvature > small.mean_max_curvature;
    const bool sep = small.mean_min_separation <= large.mean_min_separation ||
                     (small.cell == "UU" &&
                      std::abs(small.mean_min_separation / large.mean_min_separation - 1) <= kA4UuBand);
    separation_ok += sep;
    min_increase = std::min(min_increase, large.path_length_increase_pct);
    mean_increase += large.path_length_increase_pct / static_cast<double>(cells);
    if (!sep) notes += " sep:" + small.cell;
  }
  const bool ok = cells == 9 && longer == 9 && curvier == 9 && separation_ok >= 8 && seconds < kA4Budget;
  return {ok, fmt("longer %.0f/9, curvier %.0f/9, separation %.0f/9, path increase mean %.2f%%",
                  static_cast<double>(longer), static_cast<double>(curvier), static_cast<double>(separation_ok),
                  mean_increase) +
                  fmt(" min %.2f%%", min_increase) + notes};
}

Verdict a5() {
  std::size_t trials = 0, matched = 0, collisions = 0;
  for (const GridTrial& t : full_grid().trials) {
    const std::string name = t.cell.name();
    if (name != "LR" && name != "RL") continue;
    ++trials;
    const bool human_left = t.cell.human_action == 'L';
    matched += t.result.metrics.passed_left[0] == human_left;
    collisions += t.result.outcome == Outcome::Collision;
  }
  return {trials == 2 * 2 * kA4Seeds && matched == trials && collisions == 0,
          fmt("side matches human in %.0f/%.0f, collisions %.0f", static_cast<double>(matched),
              static_cast<double>(trials), static_cast<double>(collisions))};
}

Verdict a6() {
  const std::filesystem::path dir = OPINION_NAV_SCENARIO_DIR;
  std::string detail;
  bool ok = true;
  for (const char* name : {"two_humans_close", "two_humans_wide"}) {
    const Scenario base = load_scenario(dir / (std::string(name) + ".json"));
    const bool wide = std::string(name) == "two_humans_wide";
    // Proxy signs at the start: same sign for the close pair, opposite for the wide one.
    const World w0 = initial_world(base);
    double proxy[2];
    for (int j = 0; j < 2; ++j) {
      const Observation obs = relative_geometry(w0.robot.pose(), w0.humans[j].pose(), base.robot.goal);
      proxy[j] = proxy_opinion(obs.eta_h, base.robot.params.proxy_cap);
    }
    const bool opposite = proxy[0] * proxy[1] < 0;
    ok = ok && opposite == wide;
    std::size_t expected = 0;
    for (std::uint64_t seed = 0; seed < kA6Seeds; ++seed) {
      Scenario s = base;
      s.seed = seed;
      const TrialResult r = run_trial(s);
      const bool between = r.metrics.passed_left[0] != r.metrics.passed_left[1];
      expected += r.outcome == Outcome::ReachedGoal && between == wide;
    }
    ok = ok && expected == kA6Seeds;
    detail += fmt(wide ? "3 m: between in %.0f/%.0f" : "0.8 m: outside in %.0f/%.0f; ", static_cast<double>(expected),
                  static_cast<double>(kA6Seeds));
  }
  return {ok, detail};
}

Verdict a7() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> pos(0.05, 2.0), gam(-5, 5), bet(0.05, kPi<double> / 2);
  double worst = 0, worst_zero = 0;
  for (std::size_t draw = 0; draw < kA7Draws; ++draw) {
    const double d = pos(rng), alpha = pos(rng), gamma = gam(rng), beta = bet(rng), k = pos(rng), u = 3 * pos(rng);
    Eigen::EigenSolver<Eigen::Matrix4d> solver(oracle_jacobian(d, alpha, gamma, beta, k, u), false);
    std::vector<std::complex<double>> dense(solver.eigenvalues().data(), solver.eigenvalues().data() + 4);
    for (const auto& v : coupled_eigenvalues(d, alpha, gamma, beta, k, u)) {
      auto it = std::min_element(dense.begin(), dense.end(),
                                 [&](const auto& a, const auto& b) { return std::abs(a - v) < std::abs(b - v); });
      worst = std::max(worst, std::abs(*it - v));
      dense.erase(it);
    }
    const double u_star = coupled_critical_attention(d, alpha, gamma, beta);
    double smallest = std::numeric_limits<double>::infinity();
    for (const auto& v : coupled_eigenvalues(d, alpha, gamma, beta, k, u_star)) smallest = std::min(smallest, std::abs(v));
    worst_zero = std::max(worst_zero, smallest);
  }
  return {worst < kA7MatchTol && worst_zero < kA7ZeroTol,
          fmt("max mismatch %.2e over %.0f draws, max |lambda| at u* %.2e", worst, static_cast<double>(kA7Draws),
              worst_zero)};
}

double rk4_order_ratio() {
  Scenario s = head_on_scenario();
  s.z_noise_std = 0;
  s.robot.params.b = 0.3;
  s.humans[0].start = Pose{{0.5, 8}, -kPi<double> / 2 - 0.1};
  s.humans[0].goal = {0.5 - 10 * std::tan(0.1), -2};
  s.humans[0].speed = 0.5;
  auto final_state = [&](double dt) {
    Scenario c = s;
    c.dt = dt;
    World w = initial_world(c);
    const auto steps = std::llround(4.0 / dt);
    for (long long i = 0; i < steps; ++i) {
      step_world(w, c);
      if (!w.focal) throw std::runtime_error("order scenario lost its focal human");
    }
    Eigen::Matrix<double, 5, 1> out;
    out << w.robot.position, w.robot.heading, w.robot.opinion.z, w.robot.opinion.u;
    return out;
  };
  const auto reference = final_state(0.01 / 16);
  return (final_state(0.01) - reference).norm() / (final_state(0.005) - reference).norm();
}

double mirror_error(const Scenario& s) {
  const TrialResult a = run_trial(s);
  const TrialResult b = run_trial(s.mirrored());
  if (a.times.size() != b.times.size()) return std::numeric_limits<double>::infinity();
  const Eigen::Vector2d o = s.robot.start.position;
  const Eigen::Vector2d g = (s.robot.goal - o).normalized();
  const Eigen::Matrix2d reflect = 2 * g * g.transpose() - Eigen::Matrix2d::Identity();
  double worst = 0;
  for (std::size_t k = 0; k < a.times.size(); ++k) {
    worst = std::max(worst, (o + reflect * (a.robot_states[k].position - o) - b.robot_states[k].position).norm());
    const auto& oa = a.robot_states[k].opinion;
    const auto& ob = b.robot_states[k].opinion;
    worst = std::max(worst, std::abs(oa.z + ob.z) / std::max(1.0, std::abs(oa.z)));
    worst = std::max(worst, std::abs(oa.u - ob.u) / std::max(1.0, std::abs(oa.u)));
    for (std::size_t j = 0; j < a.human_states.size(); ++j) {
      worst = std::max(worst, (o + reflect * (a.human_states[j][k].position - o) - b.human_states[j][k].position).norm());
    }
  }
  return worst;
}

bool invariants_hold(const Scenario& s) {
  const TrialResult r = run_trial(s);
  double u_max = 0;
  for (const auto& st : r.robot_states) u_max = std::max(u_max, st.opinion.u);
  const double z0 = std::abs(r.robot_states.front().opinion.z);
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    const auto& st = r.robot_states[k];
    if (std::abs(st.opinion.z) > std::max(z0, u_max / s.robot.params.d) + 0.01) return false;
    if (st.opinion.u < 0) return false;
    if (const auto* hill = std::get_if<HillAttentionLaw>(&s.robot.params.attention); hill && r.focal_index[k]) {
      if (st.opinion.u < hill->u_lo || st.opinion.u > hill->u_hi) return false;
    }
  }
  const TrialResult again = run_trial(s);
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    if (r.robot_states[k].position != again.robot_states[k].position ||
        r.robot_states[k].opinion.z != again.robot_states[k].opinion.z) {
      return false;
    }
  }
  return true;
}

bool focal_oracle_agrees() {
  Scenario s;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> pos(-25, 25), ang(-kPi<double>, kPi<double>);
  auto wrap = [](double a) { return std::atan2(std::sin(a), std::cos(a)); };
  for (std::size_t trial = 0; trial < kA8FocalConfigs; ++trial) {
    AgentState robot;
    robot.position = {pos(rng), pos(rng)};
    robot.heading = ang(rng);
    std::vector<AgentState> hs(3);
    for (auto& h : hs) {
      const double bearing = robot.heading + ang(rng) / 2.5;
      const double dist = 0.5 + std::abs(pos(rng));
      h.position = robot.position + dist * Eigen::Vector2d(std::cos(bearing), std::sin(bearing));
      h.heading = bearing + kPi<double> + ang(rng) / 1.5;
    }
    std::optional<std::size_t> best;
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < hs.size(); ++j) {
      const Eigen::Vector2d d = hs[j].position - robot.position;
      const double eta_r = wrap(std::atan2(d.y(), d.x()) - robot.heading);
      const double kappa = std::cos(wrap(hs[j].heading - std::atan2(-d.y(), -d.x())));
      if (d.norm() > s.detection_range || std::abs(eta_r) > s.fov_half_angle || kappa <= 0) continue;
      if (d.norm() / kappa < best_score) {
        best_score = d.norm() / kappa;
        best = j;
      }
    }
    if (select_focal_human(robot, hs, s) != best) return false;
  }
  return true;
}

Verdict a8() {
  const double ratio = rk4_order_ratio();
  const std::filesystem::path dir = OPINION_NAV_SCENARIO_DIR;
  std::vector<Scenario> corpus;
  Scenario uu = head_on_scenario();
  uu.seed = 5;
  corpus.push_back(uu);
  corpus.push_back(grid_scenario(uu, GridCell{'L', 'R'}, kPi<double> / 6, 0.5, 9));
  corpus.push_back(load_scenario(dir / "two_humans_close.json"));
  corpus.push_back(load_scenario(dir / "two_humans_wide.json"));
  corpus.push_back(load_scenario(dir / "reactive_headon.json"));
  double mirror = 0;
  bool invariants = true;
  for (const Scenario& s : corpus) {
    mirror = std::max(mirror, mirror_error(s));
    invariants = invariants && invariants_hold(s);
  }
  const bool focal = focal_oracle_agrees();
  return {ratio >= kA8OrderRatio && mirror < kA8MirrorTol && invariants && focal,
          fmt("order ratio %.2f, mirror error %.2e", ratio, mirror) + (invariants ? ", invariants ok" : ", invariants BROKEN") +
              (focal ? ", focal oracle ok" : ", focal oracle MISMATCH")};
}

}  // namespace

int main() {
  std::printf("worker threads: %zu\n", worker_count());
  report("A1", "critical attention, single agent", a1);
  report("A2", "equilibrium oracle", a2);
  report("A3", "deadlock breaking, head-on", a3);
  report("A4", "heading offset trade-off", a4);
  report("A5", "bias conflict adaptation", a5);
  report("A6", "two-human gap behaviour", a6);
  report("A7", "coupled eigenvalue oracle", a7);
  report("A8", "numerics", a8);
  std::printf("%s: %d failing\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
