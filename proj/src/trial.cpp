#include "opinion_nav/trial.hpp"

#include <cmath>
#include <limits>

#include "opinion_nav/metrics.hpp"

namespace opinion_nav {

namespace {

std::vector<Eigen::Vector2d> positions(const std::vector<AgentState>& states) {
  std::vector<Eigen::Vector2d> out;
  out.reserve(states.size());
  for (const AgentState& s : states) out.push_back(s.position);
  return out;
}

void record(TrialResult& result, const World& world) {
  result.times.push_back(world.time);
  result.robot_states.push_back(world.robot);
  for (std::size_t j = 0; j < world.humans.size(); ++j) result.human_states[j].push_back(world.humans[j]);
  result.focal_index.push_back(world.focal);
}

}  // namespace

const char* to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::ReachedGoal:
      return "reached";
    case Outcome::Collision:
      return "collision";
    case Outcome::Timeout:
      break;
  }
  return "timeout";
}

std::optional<Outcome> terminal_outcome(const World& world, const Scenario& scenario) {
  for (const AgentState& h : world.humans) {
    if ((h.position - world.robot.position).norm() < scenario.collision_radius) return Outcome::Collision;
  }
  if ((world.robot.position - scenario.robot.goal).norm() <= scenario.goal_tolerance) return Outcome::ReachedGoal;
  return std::nullopt;
}

TrialMetrics compute_metrics(const Scenario& scenario, const std::vector<AgentState>& robot,
                             const std::vector<std::vector<AgentState>>& humans, std::optional<double> time_to_goal) {
  TrialMetrics m;
  const auto robot_path = positions(robot);
  if (robot_path.size() >= 2) m.path_length = path_length(robot_path);
  if (robot_path.size() >= 3) m.max_curvature = max_curvature(robot_path);
  m.time_to_goal = time_to_goal;
  m.min_separation = std::numeric_limits<double>::infinity();

  const Eigen::Vector2d axis = scenario.robot.goal - scenario.robot.start.position;
  for (const auto& series : humans) {
    const auto human_path = positions(series);
    double best = std::numeric_limits<double>::infinity();
    std::size_t at = 0;
    for (std::size_t k = 0; k < human_path.size() && k < robot_path.size(); ++k) {
      const double dist = (human_path[k] - robot_path[k]).norm();
      if (dist < best) {
        best = dist;
        at = k;
      }
    }
    m.min_separation_per_human.push_back(best);
    m.min_separation = std::min(m.min_separation, best);
    bool left = false;
    if (!human_path.empty()) {
      const Eigen::Vector2d rel = human_path[at] - robot_path[at];
      left = axis.x() * rel.y() - axis.y() * rel.x() < 0;
    }
    m.passed_left.push_back(left);
  }
  return m;
}

TrialResult run_trial(const Scenario& scenario) {
  scenario.validate();
  World world = initial_world(scenario);
  TrialResult result;
  result.human_states.resize(world.humans.size());

  const auto steps = static_cast<std::uint64_t>(std::llround(scenario.max_time / scenario.dt));
  result.times.reserve(steps + 1);
  result.robot_states.reserve(steps + 1);
  for (auto& h : result.human_states) h.reserve(steps + 1);
  record(result, world);

  std::optional<Outcome> outcome = terminal_outcome(world, scenario);
  while (!outcome && world.tick < steps) {
    step_world(world, scenario);
    record(result, world);
    outcome = terminal_outcome(world, scenario);
  }
  result.outcome = outcome.value_or(Outcome::Timeout);
  std::optional<double> time_to_goal;
  if (result.outcome == Outcome::ReachedGoal) time_to_goal = world.time;
  result.metrics = compute_metrics(scenario, result.robot_states, result.human_states, time_to_goal);
  return result;
}

nlohmann::json to_json(const TrialMetrics& m) {
  auto finite_or_null = [](double v) -> nlohmann::json { return std::isfinite(v) ? nlohmann::json(v) : nullptr; };
  nlohmann::json per_human = nlohmann::json::array();
  for (double v : m.min_separation_per_human) per_human.push_back(finite_or_null(v));
  nlohmann::json left = nlohmann::json::array();
  for (bool b : m.passed_left) left.push_back(b);
  return {{"path_length", m.path_length},
          {"max_curvature", m.max_curvature},
          {"min_separation", finite_or_null(m.min_separation)},
          {"min_separation_per_human", per_human},
          {"time_to_goal", m.time_to_goal ? nlohmann::json(*m.time_to_goal) : nlohmann::json(nullptr)},
          {"passed_left", left}};
}

void write_trajectory_csv(std::ostream& out, const TrialResult& result) {
  out << "t,agent,x,y,theta,z,u,focal\n";
  auto row = [&](double t, const std::string& agent, const AgentState& s, const std::string& focal) {
    out << format_number(t) << ',' << agent << ',' << format_number(s.position.x()) << ','
        << format_number(s.position.y()) << ',' << format_number(s.heading) << ',' << format_number(s.opinion.z)
        << ',' << format_number(s.opinion.u) << ',' << focal << '\n';
  };
  for (std::size_t k = 0; k < result.times.size(); ++k) {
    const std::string focal = result.focal_index[k] ? std::to_string(*result.focal_index[k]) : "";
    row(result.times[k], "robot", result.robot_states[k], focal);
    for (std::size_t j = 0; j < result.human_states.size(); ++j) {
      row(result.times[k], "human" + std::to_string(j), result.human_states[j][k], focal);
    }
  }
}

}  // namespace opinion_nav
