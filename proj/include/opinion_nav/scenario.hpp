#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "opinion_nav/opinion_core.hpp"

namespace opinion_nav {

struct AgentState {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  double heading = 0;
  double speed = 0;
  OpinionState opinion;

  Pose pose() const { return {position, heading}; }
};

enum class Prompt { Straight, BearLeft, BearRight };

struct ScriptedPolicy {
  Prompt prompt = Prompt::Straight;
  double bear_offset = kPi<double> / 12;
};

/// Human running the same opinion-driven controller as the robot.
struct ReactivePolicy {
  OpinionParams params;
};

/// Pose driven from outside (the realtime service) every tick.
struct ExternalPolicy {};

using HumanPolicy = std::variant<ScriptedPolicy, ReactivePolicy, ExternalPolicy>;

struct RobotSpec {
  Pose start{{0.0, 0.0}, kPi<double> / 2};
  Eigen::Vector2d goal{0.0, 6.1};
  double speed = 0.7;
  OpinionParams params;
};

struct HumanSpec {
  Pose start{{0.0, 6.1}, -kPi<double> / 2};
  Eigen::Vector2d goal{0.0, -1.0};
  double speed = 1.09;
  HumanPolicy policy = ScriptedPolicy{};
};

struct Scenario {
  std::string name = "scenario";
  RobotSpec robot;
  std::vector<HumanSpec> humans;
  double dt = 0.01;
  double max_time = 30;
  std::uint64_t seed = 0;
  double z_noise_std = 1e-3;
  // Negates the drawn initial-opinion perturbation; used to build exact mirror runs.
  bool mirror_noise = false;
  double detection_range = 20;
  double fov_half_angle = kPi<double> / 3;
  double goal_tolerance = 0.2;
  double collision_radius = 0.25;
  double lane_width = 0.8;

  /// Each entry is "<json pointer>: <problem>".
  std::vector<std::string> violations() const;
  void validate() const;

  std::size_t count_external() const;

  /// Reflection about the robot's start->goal line, with every bias negated and
  /// the initial-opinion perturbation flipped. Scripted prompts swap sides.
  Scenario mirrored() const;
};

class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

const char* to_string(Prompt prompt);
std::optional<Prompt> prompt_from_string(const std::string& text);

}  // namespace opinion_nav
