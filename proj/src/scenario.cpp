#include "opinion_nav/scenario.hpp"

#include <cmath>
#include <sstream>

namespace opinion_nav {

namespace {

void check_params(const OpinionParams& params, const std::string& where, std::vector<std::string>& out) {
  for (const std::string& problem : params.violations()) out.push_back(where + ": " + problem);
}

bool finite(const Eigen::Vector2d& v) { return v.allFinite(); }

std::string join(const std::vector<std::string>& items) {
  std::ostringstream os;
  for (std::size_t i = 0; i < items.size(); ++i) os << (i ? "; " : "") << items[i];
  return os.str();
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> problems)
    : std::invalid_argument("invalid scenario: " + join(problems)), problems_(std::move(problems)) {}

const char* to_string(Prompt prompt) {
  switch (prompt) {
    case Prompt::BearLeft:
      return "bear_left";
    case Prompt::BearRight:
      return "bear_right";
    case Prompt::Straight:
      break;
  }
  return "straight";
}

std::optional<Prompt> prompt_from_string(const std::string& text) {
  if (text == "straight" || text == "U" || text == "S") return Prompt::Straight;
  if (text == "bear_left" || text == "L") return Prompt::BearLeft;
  if (text == "bear_right" || text == "R") return Prompt::BearRight;
  return std::nullopt;
}

std::vector<std::string> Scenario::violations() const {
  std::vector<std::string> out;
  if (!(dt > 0)) out.emplace_back("/dt: must be > 0");
  if (!(max_time > 0)) out.emplace_back("/max_time: must be > 0");
  if (!(z_noise_std >= 0)) out.emplace_back("/z_noise_std: must be >= 0");
  if (!(detection_range > 0)) out.emplace_back("/detection_range: must be > 0");
  if (!(fov_half_angle > 0 && fov_half_angle <= kPi<double>)) out.emplace_back("/fov_half_angle: must lie in (0, pi]");
  if (!(goal_tolerance > 0)) out.emplace_back("/goal_tolerance: must be > 0");
  if (!(collision_radius >= 0)) out.emplace_back("/collision_radius: must be >= 0");
  if (!(lane_width > 0)) out.emplace_back("/lane_width: must be > 0");

  if (!finite(robot.start.position) || !std::isfinite(robot.start.heading)) {
    out.emplace_back("/robot/start: must be finite");
  }
  if (!finite(robot.goal)) out.emplace_back("/robot/goal: must be finite");
  if (!(robot.speed > 0)) out.emplace_back("/robot/speed: must be > 0");
  check_params(robot.params, "/robot/params", out);

  for (std::size_t j = 0; j < humans.size(); ++j) {
    const HumanSpec& h = humans[j];
    const std::string where = "/humans/" + std::to_string(j);
    if (!finite(h.start.position) || !std::isfinite(h.start.heading)) out.push_back(where + "/start: must be finite");
    if (!finite(h.goal)) out.push_back(where + "/goal: must be finite");
    if (!(h.speed >= 0)) out.push_back(where + "/speed: must be >= 0");
    if ((h.start.position - robot.start.position).norm() == 0.0) {
      out.push_back(where + "/start: coincides with the robot start");
    }
    if (const auto* scripted = std::get_if<ScriptedPolicy>(&h.policy)) {
      if (!(scripted->bear_offset > 0 && scripted->bear_offset < kPi<double> / 2)) {
        out.push_back(where + "/policy/bear_offset: must lie in (0, pi/2)");
      }
      if ((h.goal - h.start.position).norm() == 0.0) out.push_back(where + "/goal: must differ from start");
    } else if (const auto* reactive = std::get_if<ReactivePolicy>(&h.policy)) {
      check_params(reactive->params, where + "/policy/params", out);
    }
  }
  return out;
}

void Scenario::validate() const {
  auto problems = violations();
  if (!problems.empty()) throw ValidationError(std::move(problems));
}

std::size_t Scenario::count_external() const {
  std::size_t n = 0;
  for (const HumanSpec& h : humans) n += std::holds_alternative<ExternalPolicy>(h.policy) ? 1 : 0;
  return n;
}

Scenario Scenario::mirrored() const {
  const Eigen::Vector2d origin = robot.start.position;
  const Eigen::Vector2d axis = (robot.goal - origin).normalized();
  const double axis_angle = std::atan2(axis.y(), axis.x());
  const Eigen::Matrix2d reflect = 2.0 * axis * axis.transpose() - Eigen::Matrix2d::Identity();

  auto point = [&](const Eigen::Vector2d& p) -> Eigen::Vector2d { return origin + reflect * (p - origin); };
  auto pose = [&](const Pose& p) -> Pose { return {point(p.position), wrap_angle(2.0 * axis_angle - p.heading)}; };

  Scenario out = *this;
  out.name = name + "_mirrored";
  out.mirror_noise = !mirror_noise;
  out.robot.start = pose(robot.start);
  out.robot.goal = point(robot.goal);
  out.robot.params.b = -robot.params.b;
  for (HumanSpec& h : out.humans) {
    h.start = pose(h.start);
    h.goal = point(h.goal);
    if (auto* scripted = std::get_if<ScriptedPolicy>(&h.policy)) {
      if (scripted->prompt == Prompt::BearLeft) {
        scripted->prompt = Prompt::BearRight;
      } else if (scripted->prompt == Prompt::BearRight) {
        scripted->prompt = Prompt::BearLeft;
      }
    } else if (auto* reactive = std::get_if<ReactivePolicy>(&h.policy)) {
      reactive->params.b = -reactive->params.b;
    }
  }
  return out;
}

}  // namespace opinion_nav
