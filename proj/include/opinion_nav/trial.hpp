#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "opinion_nav/format.hpp"
#include "opinion_nav/scenario.hpp"
#include "opinion_nav/world.hpp"

namespace opinion_nav {

enum class Outcome { ReachedGoal, Timeout, Collision };

const char* to_string(Outcome outcome);

struct TrialMetrics {
  double path_length = 0;
  double max_curvature = 0;
  std::vector<double> min_separation_per_human;
  double min_separation = 0;  // +inf with no humans
  std::optional<double> time_to_goal;
  // Robot went by on the human's right-hand side as seen along the robot's
  // start->goal line, i.e. the human was on the robot's right at closest approach.
  std::vector<bool> passed_left;
};

struct TrialResult {
  std::vector<double> times;
  std::vector<AgentState> robot_states;
  std::vector<std::vector<AgentState>> human_states;  // [human][sample]
  std::vector<std::optional<std::size_t>> focal_index;
  TrialMetrics metrics;
  Outcome outcome = Outcome::Timeout;
};

/// Runs until goal, collision or max_time. Throws ValidationError on a bad
/// scenario and NumericalBlowup if the integration diverges.
TrialResult run_trial(const Scenario& scenario);

/// Metrics of a recorded run; works on partial series (e.g. a live session).
TrialMetrics compute_metrics(const Scenario& scenario, const std::vector<AgentState>& robot,
                             const std::vector<std::vector<AgentState>>& humans, std::optional<double> time_to_goal);

/// Collision with any human, else goal arrival, else nothing.
std::optional<Outcome> terminal_outcome(const World& world, const Scenario& scenario);

nlohmann::json to_json(const TrialMetrics& metrics);

/// One row per agent per sample: t,agent,x,y,theta,z,u,focal
void write_trajectory_csv(std::ostream& out, const TrialResult& result);

}  // namespace opinion_nav
