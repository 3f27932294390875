#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "opinion_nav/scenario.hpp"

namespace opinion_nav {

/// Per-human bookkeeping that is not part of the integrated state.
struct HumanRuntime {
  double base_heading = 0;  // start->goal bearing
  bool lane_captured = false;
  bool engaged = false;  // reactive humans: robot inside their window at the last step
  double commanded_heading = 0;
  double commanded_speed = 0;
};

struct World {
  double time = 0;
  std::uint64_t tick = 0;
  AgentState robot;
  std::vector<AgentState> humans;
  std::vector<HumanRuntime> runtime;
  // Focal human that governed the most recent step (or the initial selection).
  std::optional<std::size_t> focal;
};

/// World at t = 0 before any opinion perturbation is applied.
World initial_world(const Scenario& scenario);

/// Draws the robot's initial-opinion perturbation from the scenario seed.
double initial_opinion_perturbation(const Scenario& scenario);

/// True when `obs` (taken from the observer) passes the detection range,
/// field of view and approach (kappa > 0) tests.
bool in_detection_window(const Observation& obs, const Scenario& scenario);

std::optional<std::size_t> select_focal_human(const AgentState& robot, std::span<const AgentState> humans,
                                              const Scenario& scenario);

/// Advances every mover by one dt with a joint RK4 step.
void step_world(World& world, const Scenario& scenario);

/// Standalone scripted-human update (constant heading, lane capture).
AgentState scripted_human_step(const AgentState& human, HumanRuntime& runtime, const HumanSpec& spec,
                               const ScriptedPolicy& policy, double lane_width, double dt);

/// Standalone reactive-human update with the robot held at its current pose.
AgentState reactive_human_step(const AgentState& human, const AgentState& robot, const OpinionParams& params,
                               const Eigen::Vector2d& goal, const Scenario& scenario, double dt);

/// Initial heading of a scripted human: start->goal bearing offset by the prompt.
double scripted_initial_heading(const HumanSpec& spec, const ScriptedPolicy& policy);

/// Signed lateral offset of `position` from the start->goal line (left positive).
double lateral_offset(const HumanSpec& spec, const Eigen::Vector2d& position);

}  // namespace opinion_nav
