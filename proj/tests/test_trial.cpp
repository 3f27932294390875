#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "opinion_nav/experiments.hpp"
#include "opinion_nav/metrics.hpp"
#include "opinion_nav/trial.hpp"

using namespace opinion_nav;

namespace {

Scenario two_human_scenario() {
  Scenario s = head_on_scenario();
  s.name = "pair";
  s.humans.clear();
  HumanSpec a, b;
  a.start = Pose{{-0.6, 6.5}, -kPi<double> / 2};
  a.goal = {-0.6, -1};
  b.start = Pose{{1.4, 7.5}, -kPi<double> / 2 - 0.1};
  b.goal = {0.5, -1};
  b.speed = 0.9;
  b.policy = ScriptedPolicy{Prompt::BearRight};
  s.humans = {a, b};
  return s;
}

Scenario reactive_scenario() {
  Scenario s = head_on_scenario();
  s.name = "reactive";
  s.robot.params.b = 0.2;
  OpinionParams human = s.robot.params;
  human.b = -0.1;
  human.attention = HillAttentionLaw{};
  s.humans[0].policy = ReactivePolicy{human};
  s.humans[0].start.heading += 0.05;
  return s;
}

// Mirror-symmetry corpus: a tilted start->goal line checks the general reflection.
std::vector<Scenario> corpus() {
  std::vector<Scenario> out;
  Scenario uu = head_on_scenario();
  uu.seed = 5;
  out.push_back(uu);
  out.push_back(grid_scenario(uu, GridCell{'L', 'R'}, kPi<double> / 6, 0.5, 9));
  out.push_back(grid_scenario(uu, GridCell{'R', 'U'}, kPi<double> / 4, 0.5, 2));
  out.push_back(two_human_scenario());
  out.push_back(reactive_scenario());
  Scenario tilted = two_human_scenario();
  tilted.robot.start = Pose{{1, 2}, 0.3};
  tilted.robot.goal = {5, 7};
  tilted.humans[0].start = Pose{{5.5, 7.2}, -2.2};
  tilted.humans[0].goal = {0, 1};
  tilted.humans[1].start = Pose{{4.2, 8.0}, -2.0};
  tilted.humans[1].goal = {1, 0};
  tilted.robot.params.attention = HillAttentionLaw{0.1, 2.0, 6, 5};
  out.push_back(tilted);
  return out;
}

Eigen::Vector2d reflect(const Scenario& s, const Eigen::Vector2d& p) {
  const Eigen::Vector2d o = s.robot.start.position;
  const Eigen::Vector2d g = (s.robot.goal - o).normalized();
  return o + (2 * g * g.transpose() - Eigen::Matrix2d::Identity()) * (p - o);
}

}  // namespace

TEST_CASE("path metrics") {
  std::vector<Eigen::Vector2d> line;
  for (int i = 0; i <= 610; ++i) line.emplace_back(0, 0.01 * i);
  CHECK(path_length(line) == doctest::Approx(6.1).epsilon(1e-12));
  CHECK(max_curvature(line) == doctest::Approx(0.0).scale(1).epsilon(1e-9));

  std::vector<Eigen::Vector2d> circle;
  for (int deg = 0; deg <= 360; ++deg) {
    const double a = deg * kPi<double> / 180;
    circle.emplace_back(2 * std::cos(a), 2 * std::sin(a));
  }
  CHECK(std::abs(max_curvature(circle) - 0.5) < 1e-3);

  std::vector<Eigen::Vector2d> offset;
  for (const auto& p : line) offset.emplace_back(p.x() + 1, p.y());
  CHECK(min_separation(line, offset) == doctest::Approx(1.0).epsilon(1e-15));

  SUBCASE("repeated samples are skipped by the curvature estimator") {
    std::vector<Eigen::Vector2d> stalled{{0, 0}, {0, 0}, {1, 0}, {2, 0}, {2, 0}};
    CHECK(max_curvature(stalled) == 0.0);
  }
  SUBCASE("too few samples") {
    std::vector<Eigen::Vector2d> one{{0, 0}};
    std::vector<Eigen::Vector2d> two{{0, 0}, {1, 0}};
    CHECK_THROWS_AS(path_length(one), std::invalid_argument);
    CHECK_THROWS_AS(max_curvature(two), std::invalid_argument);
    CHECK_THROWS_AS(min_separation(one, two), std::invalid_argument);
  }
}

TEST_CASE("head-on trial reaches the goal") {
  Scenario s = head_on_scenario();
  s.seed = 1;
  const TrialResult r = run_trial(s);
  CHECK(r.outcome == Outcome::ReachedGoal);
  REQUIRE(r.metrics.time_to_goal.has_value());
  CHECK(*r.metrics.time_to_goal == r.times.back());
  CHECK(r.metrics.min_separation > s.collision_radius);
  CHECK((r.robot_states.back().position - s.robot.goal).norm() <= s.goal_tolerance);
  CHECK(r.human_states[0][0].position == Eigen::Vector2d(0, 6.1));
  CHECK((r.human_states[0][1].position - r.human_states[0][0].position).norm() ==
        doctest::Approx(1.09 * s.dt).epsilon(1e-12));
  CHECK(r.metrics.passed_left.size() == 1);
}

TEST_CASE("passing side follows the sign of the initial perturbation") {
  Scenario s = head_on_scenario();
  int left = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    s.seed = seed;
    const TrialResult r = run_trial(s);
    REQUIRE(r.outcome == Outcome::ReachedGoal);
    const bool positive = r.robot_states.front().opinion.z > 0;
    CHECK(r.metrics.passed_left[0] == positive);
    left += r.metrics.passed_left[0];
  }
  CHECK(left > 0);
  CHECK(left < 10);
}

TEST_CASE("trial series invariants") {
  for (const Scenario& s : corpus()) {
    CAPTURE(s.name);
    const TrialResult r = run_trial(s);
    const std::size_t n = r.times.size();
    REQUIRE(n >= 2);
    CHECK(r.robot_states.size() == n);
    CHECK(r.focal_index.size() == n);
    for (const auto& h : r.human_states) CHECK(h.size() == n);

    double u_max = 0;
    for (const auto& st : r.robot_states) u_max = std::max(u_max, st.opinion.u);
    const double z0 = std::abs(r.robot_states.front().opinion.z);
    const bool hill = s.robot.params.uses_hill();
    for (std::size_t k = 0; k < n; ++k) {
      if (k > 0) {
        REQUIRE(r.times[k] > r.times[k - 1]);
        CHECK(r.times[k] == doctest::Approx(static_cast<double>(k) * s.dt).epsilon(1e-12));
        // A step is a chord of an arc of length V dt turning by at most k dt.
        const double step = (r.robot_states[k].position - r.robot_states[k - 1].position).norm();
        const double arc = s.robot.speed * s.dt;
        const double turn = s.robot.params.k * s.dt;
        CHECK(step <= arc * (1 + 1e-9));
        CHECK(step >= arc * (1 - turn * turn / 24 - 1e-9));
      }
      const AgentState& st = r.robot_states[k];
      CHECK(st.heading > -kPi<double>);
      CHECK(st.heading <= kPi<double>);
      CHECK(std::abs(st.opinion.z) <= std::max(z0, u_max / s.robot.params.d) + 0.01);
      if (hill && r.focal_index[k]) {
        const auto& law = std::get<HillAttentionLaw>(s.robot.params.attention);
        CHECK(st.opinion.u >= law.u_lo);
        CHECK(st.opinion.u <= law.u_hi);
      }
      CHECK(st.opinion.u >= 0);
    }
    const double chord = (r.robot_states.back().position - r.robot_states.front().position).norm();
    CHECK(r.metrics.path_length >= chord);
    CHECK(r.metrics.min_separation >= 0);
  }
}

TEST_CASE("identical scenarios give bit-identical results") {
  const Scenario s = reactive_scenario();
  const TrialResult a = run_trial(s);
  const TrialResult b = run_trial(s);
  REQUIRE(a.times.size() == b.times.size());
  for (std::size_t k = 0; k < a.times.size(); ++k) {
    REQUIRE(a.robot_states[k].position == b.robot_states[k].position);
    REQUIRE(a.robot_states[k].opinion.z == b.robot_states[k].opinion.z);
    REQUIRE(a.robot_states[k].opinion.u == b.robot_states[k].opinion.u);
    REQUIRE(a.human_states[0][k].position == b.human_states[0][k].position);
  }
  std::ostringstream csv_a, csv_b;
  write_trajectory_csv(csv_a, a);
  write_trajectory_csv(csv_b, b);
  CHECK(csv_a.str() == csv_b.str());
}

TEST_CASE("mirrored scenarios give mirrored trajectories") {
  for (const Scenario& s : corpus()) {
    CAPTURE(s.name);
    const TrialResult a = run_trial(s);
    const Scenario m = s.mirrored();
    const TrialResult b = run_trial(m);
    REQUIRE(a.times.size() == b.times.size());
    CHECK(a.outcome == b.outcome);
    double worst = 0;
    for (std::size_t k = 0; k < a.times.size(); ++k) {
      worst = std::max(worst, (reflect(s, a.robot_states[k].position) - b.robot_states[k].position).norm());
      // Opinion and attention reach the thousands with the exponential law, so
      // they are compared relative to their size.
      const OpinionState& oa = a.robot_states[k].opinion;
      const OpinionState& ob = b.robot_states[k].opinion;
      worst = std::max(worst, std::abs(oa.z + ob.z) / std::max(1.0, std::abs(oa.z)));
      worst = std::max(worst, std::abs(oa.u - ob.u) / std::max(1.0, std::abs(oa.u)));
      for (std::size_t j = 0; j < a.human_states.size(); ++j) {
        worst = std::max(worst,
                         (reflect(s, a.human_states[j][k].position) - b.human_states[j][k].position).norm());
      }
    }
    CHECK(worst < 1e-9);
    for (std::size_t j = 0; j < a.metrics.passed_left.size(); ++j) {
      CHECK(a.metrics.passed_left[j] != b.metrics.passed_left[j]);
    }
  }
}

TEST_CASE("trajectory csv layout") {
  Scenario s = head_on_scenario();
  s.max_time = 0.02;
  const TrialResult r = run_trial(s);
  std::ostringstream os;
  write_trajectory_csv(os, r);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,agent,x,y,theta,z,u,focal");
  std::getline(in, line);
  CHECK(line.rfind("0,robot,0,0,", 0) == 0);
  std::getline(in, line);
  CHECK(line.rfind("0,human0,0,6.1,", 0) == 0);
  int rows = 2;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 6);
  CHECK(r.outcome == Outcome::Timeout);
}

TEST_CASE("invalid scenarios are rejected before running") {
  Scenario s = head_on_scenario();
  s.dt = -1;
  s.robot.params.k = 0;
  try {
    run_trial(s);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(e.problems().size() == 2);
  }
}

TEST_CASE("metrics json") {
  TrialMetrics m;
  m.min_separation = std::numeric_limits<double>::infinity();
  const auto j = to_json(m);
  CHECK(j["min_separation"].is_null());
  CHECK(j["time_to_goal"].is_null());
}

TEST_CASE("coupled system converges at fourth order") {
  Scenario s = head_on_scenario();
  s.z_noise_std = 0;
  s.robot.params.b = 0.3;
  s.humans[0].start = Pose{{0.5, 8}, -kPi<double> / 2 - 0.1};
  s.humans[0].goal = {0.5 - 10 * std::tan(0.1), -2};
  s.humans[0].speed = 0.5;
  const double horizon = 4.0;

  auto final_state = [&](double dt) {
    Scenario c = s;
    c.dt = dt;
    World w = initial_world(c);
    const auto steps = std::llround(horizon / dt);
    for (long long i = 0; i < steps; ++i) {
      step_world(w, c);
      REQUIRE(w.focal.has_value());
    }
    Eigen::Matrix<double, 5, 1> out;
    out << w.robot.position, w.robot.heading, w.robot.opinion.z, w.robot.opinion.u;
    return out;
  };
  const auto reference = final_state(0.01 / 16);
  const double coarse = (final_state(0.01) - reference).norm();
  const double fine = (final_state(0.005) - reference).norm();
  CAPTURE(coarse);
  CAPTURE(fine);
  CHECK(coarse / fine >= 8);
}
