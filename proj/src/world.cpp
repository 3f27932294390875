#include "opinion_nav/world.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "opinion_nav/rk4.hpp"

namespace opinion_nav {

namespace {

// Integrated layout: [x, y, theta, z, u] per mover, robot first.
constexpr Eigen::Index kStride = 5;

using Vector = Eigen::VectorXd;
using Slope = Eigen::Matrix<double, 5, 1>;

Pose pose_at(const Vector& s, Eigen::Index agent) {
  const Eigen::Index o = agent * kStride;
  return {{s(o), s(o + 1)}, s(o + 2)};
}

Slope kinematic_rhs(double heading, double speed) {
  Slope out = Slope::Zero();
  out(0) = speed * std::cos(heading);
  out(1) = speed * std::sin(heading);
  return out;
}

// Opinion-driven mover reacting to `other`. When not engaged the opinion and
// attention are frozen at their reset value and only go-to-goal steering acts.
Slope controller_rhs(const Vector& s, Eigen::Index agent, const Pose& other, const Eigen::Vector2d& goal,
                     double speed, const OpinionParams& params, bool engaged) {
  const Eigen::Index o = agent * kStride;
  const Pose self = pose_at(s, agent);
  Slope out = kinematic_rhs(self.heading, speed);
  const double z = s(o + 3);
  if (!engaged) {
    const Eigen::Vector2d to_goal = goal - self.position;
    const double phi = wrap_angle(std::atan2(to_goal.y(), to_goal.x()) - self.heading);
    out(2) = heading_rhs(z, phi, params);
    return out;
  }
  const Observation obs = relative_geometry(self, other, goal);
  const double proxy = proxy_opinion(obs.eta_h, params.proxy_cap);
  double u = s(o + 4);
  if (const auto* hill = std::get_if<HillAttentionLaw>(&params.attention)) {
    u = attention_hill(obs.kappa, obs.chi, *hill);
  } else {
    out(4) = attention_ode_rhs(u, std::cos(obs.eta_r), obs.chi, std::get<OdeAttentionLaw>(params.attention));
  }
  out(3) = robot_opinion_rhs(OpinionState{z, u}, proxy, params);
  out(2) = heading_rhs(z, obs.phi_r, params);
  return out;
}

double hill_attention_now(const Pose& self, const Pose& other, const Eigen::Vector2d& goal,
                          const HillAttentionLaw& law) {
  if ((self.position - other.position).norm() == 0.0) return law.u_hi;
  const Observation obs = relative_geometry(self, other, goal);
  return attention_hill(obs.kappa, obs.chi, law);
}

std::string component_name(Eigen::Index component) {
  static constexpr std::array<const char*, kStride> fields{"x", "y", "theta", "z", "u"};
  const Eigen::Index agent = component / kStride;
  const std::string who = agent == 0 ? std::string("robot") : "human" + std::to_string(agent - 1);
  return who + "." + fields[static_cast<std::size_t>(component % kStride)];
}

void reset_opinion(AgentState& agent) { agent.opinion = OpinionState{}; }

void refresh_robot_focus(World& world, const Scenario& scenario) {
  world.focal = select_focal_human(world.robot, world.humans, scenario);
  if (!world.focal) {
    reset_opinion(world.robot);
  } else if (const auto* hill = std::get_if<HillAttentionLaw>(&scenario.robot.params.attention)) {
    world.robot.opinion.u =
        hill_attention_now(world.robot.pose(), world.humans[*world.focal].pose(), scenario.robot.goal, *hill);
  }
}

bool robot_in_view_of(const AgentState& human, const AgentState& robot, const HumanSpec& spec,
                      const Scenario& scenario) {
  if ((human.position - robot.position).norm() == 0.0) return false;
  return in_detection_window(relative_geometry(human.pose(), robot.pose(), spec.goal), scenario);
}

}  // namespace

double scripted_initial_heading(const HumanSpec& spec, const ScriptedPolicy& policy) {
  const Eigen::Vector2d line = spec.goal - spec.start.position;
  const double base = std::atan2(line.y(), line.x());
  switch (policy.prompt) {
    case Prompt::BearLeft:
      return wrap_angle(base + policy.bear_offset);
    case Prompt::BearRight:
      return wrap_angle(base - policy.bear_offset);
    case Prompt::Straight:
      break;
  }
  return base;
}

double lateral_offset(const HumanSpec& spec, const Eigen::Vector2d& position) {
  const Eigen::Vector2d line = (spec.goal - spec.start.position).normalized();
  const Eigen::Vector2d rel = position - spec.start.position;
  return line.x() * rel.y() - line.y() * rel.x();
}

double initial_opinion_perturbation(const Scenario& scenario) {
  if (scenario.z_noise_std == 0.0) return 0.0;
  std::mt19937_64 rng(scenario.seed);
  std::normal_distribution<double> noise(0.0, scenario.z_noise_std);
  const double draw = noise(rng);
  return scenario.mirror_noise ? -draw : draw;
}

World initial_world(const Scenario& scenario) {
  World world;
  world.robot.position = scenario.robot.start.position;
  world.robot.heading = wrap_angle(scenario.robot.start.heading);
  world.robot.speed = scenario.robot.speed;
  world.robot.opinion.z = initial_opinion_perturbation(scenario);

  for (const HumanSpec& spec : scenario.humans) {
    AgentState human;
    human.position = spec.start.position;
    human.heading = wrap_angle(spec.start.heading);
    human.speed = spec.speed;
    HumanRuntime rt;
    const Eigen::Vector2d line = spec.goal - spec.start.position;
    rt.base_heading = std::atan2(line.y(), line.x());
    if (const auto* scripted = std::get_if<ScriptedPolicy>(&spec.policy)) {
      human.heading = scripted_initial_heading(spec, *scripted);
      rt.lane_captured = scripted->prompt == Prompt::Straight;
    } else if (std::holds_alternative<ExternalPolicy>(spec.policy)) {
      // External movers start stopped until input arrives.
      human.speed = 0;
      rt.commanded_heading = human.heading;
      rt.commanded_speed = 0;
    }
    world.humans.push_back(human);
    world.runtime.push_back(rt);
  }

  refresh_robot_focus(world, scenario);
  for (std::size_t j = 0; j < world.humans.size(); ++j) {
    const auto* reactive = std::get_if<ReactivePolicy>(&scenario.humans[j].policy);
    if (!reactive) continue;
    AgentState& human = world.humans[j];
    world.runtime[j].engaged = robot_in_view_of(human, world.robot, scenario.humans[j], scenario);
    if (const auto* hill = std::get_if<HillAttentionLaw>(&reactive->params.attention);
        hill && world.runtime[j].engaged) {
      human.opinion.u = hill_attention_now(human.pose(), world.robot.pose(), scenario.humans[j].goal, *hill);
    }
  }
  return world;
}

bool in_detection_window(const Observation& obs, const Scenario& scenario) {
  return obs.chi <= scenario.detection_range && std::abs(obs.eta_r) <= scenario.fov_half_angle &&
         std::abs(obs.eta_h) < kPi<double> / 2 && obs.kappa > 0;
}

std::optional<std::size_t> select_focal_human(const AgentState& robot, std::span<const AgentState> humans,
                                              const Scenario& scenario) {
  std::optional<std::size_t> best;
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < humans.size(); ++j) {
    if ((humans[j].position - robot.position).norm() == 0.0) continue;
    const Observation obs = relative_geometry(robot.pose(), humans[j].pose(), scenario.robot.goal);
    if (!in_detection_window(obs, scenario)) continue;
    const double score = obs.chi / obs.kappa;
    if (score < best_score) {
      best_score = score;
      best = j;
    }
  }
  return best;
}

void step_world(World& world, const Scenario& scenario) {
  const std::size_t n_humans = world.humans.size();

  for (std::size_t j = 0; j < n_humans; ++j) {
    if (std::holds_alternative<ExternalPolicy>(scenario.humans[j].policy)) {
      world.humans[j].heading = wrap_angle(world.runtime[j].commanded_heading);
      world.humans[j].speed = world.runtime[j].commanded_speed;
    }
  }

  world.focal = select_focal_human(world.robot, world.humans, scenario);
  if (!world.focal) reset_opinion(world.robot);
  for (std::size_t j = 0; j < n_humans; ++j) {
    if (!std::holds_alternative<ReactivePolicy>(scenario.humans[j].policy)) continue;
    world.runtime[j].engaged = robot_in_view_of(world.humans[j], world.robot, scenario.humans[j], scenario);
    if (!world.runtime[j].engaged) reset_opinion(world.humans[j]);
  }

  const Eigen::Index n_agents = static_cast<Eigen::Index>(n_humans) + 1;
  Vector state(n_agents * kStride);
  auto pack = [&](Eigen::Index agent, const AgentState& a) {
    state.segment<kStride>(agent * kStride) << a.position.x(), a.position.y(), a.heading, a.opinion.z,
        a.opinion.u;
  };
  pack(0, world.robot);
  for (std::size_t j = 0; j < n_humans; ++j) pack(static_cast<Eigen::Index>(j) + 1, world.humans[j]);

  const std::optional<std::size_t> focal = world.focal;
  auto rhs = [&](const Vector& s) -> Vector {
    Vector out(s.size());
    const Pose robot_pose = pose_at(s, 0);
    const Pose focal_pose = focal ? pose_at(s, static_cast<Eigen::Index>(*focal) + 1) : robot_pose;
    out.segment<kStride>(0) = controller_rhs(s, 0, focal_pose, scenario.robot.goal, world.robot.speed,
                                             scenario.robot.params, focal.has_value());
    for (std::size_t j = 0; j < n_humans; ++j) {
      const Eigen::Index agent = static_cast<Eigen::Index>(j) + 1;
      const HumanSpec& spec = scenario.humans[j];
      if (const auto* reactive = std::get_if<ReactivePolicy>(&spec.policy)) {
        out.segment<kStride>(agent * kStride) = controller_rhs(s, agent, robot_pose, spec.goal, world.humans[j].speed,
                                                               reactive->params, world.runtime[j].engaged);
      } else {
        out.segment<kStride>(agent * kStride) = kinematic_rhs(s(agent * kStride + 2), world.humans[j].speed);
      }
    }
    return out;
  };

  std::vector<Eigen::Index> angles;
  for (Eigen::Index a = 0; a < n_agents; ++a) angles.push_back(a * kStride + 2);

  Vector next;
  try {
    next = rk4_step<double>(state, rhs, scenario.dt, angles);
  } catch (const NumericalBlowup& e) {
    throw NumericalBlowup(e.component(), e.stage(),
                          "numerical blowup in " + component_name(e.component()) + " at t=" +
                              std::to_string(world.time));
  }

  auto unpack = [&](Eigen::Index agent, AgentState& a) {
    const Eigen::Index o = agent * kStride;
    a.position = {next(o), next(o + 1)};
    a.heading = next(o + 2);
    a.opinion.z = next(o + 3);
    a.opinion.u = next(o + 4);
  };
  unpack(0, world.robot);
  for (std::size_t j = 0; j < n_humans; ++j) unpack(static_cast<Eigen::Index>(j) + 1, world.humans[j]);

  if (const auto* hill = std::get_if<HillAttentionLaw>(&scenario.robot.params.attention)) {
    world.robot.opinion.u =
        focal ? hill_attention_now(world.robot.pose(), world.humans[*focal].pose(), scenario.robot.goal, *hill) : 0.0;
  }
  for (std::size_t j = 0; j < n_humans; ++j) {
    const HumanSpec& spec = scenario.humans[j];
    AgentState& human = world.humans[j];
    HumanRuntime& rt = world.runtime[j];
    if (const auto* reactive = std::get_if<ReactivePolicy>(&spec.policy)) {
      if (const auto* hill = std::get_if<HillAttentionLaw>(&reactive->params.attention)) {
        human.opinion.u = rt.engaged ? hill_attention_now(human.pose(), world.robot.pose(), spec.goal, *hill) : 0.0;
      }
    } else if (std::holds_alternative<ScriptedPolicy>(spec.policy)) {
      if (!rt.lane_captured && std::abs(lateral_offset(spec, human.position)) >= scenario.lane_width) {
        rt.lane_captured = true;
        human.heading = rt.base_heading;
      }
    }
  }

  ++world.tick;
  world.time = static_cast<double>(world.tick) * scenario.dt;
}

AgentState scripted_human_step(const AgentState& human, HumanRuntime& runtime, const HumanSpec& spec,
                               const ScriptedPolicy& policy, double lane_width, double dt) {
  AgentState next = human;
  if (!runtime.lane_captured) next.heading = scripted_initial_heading(spec, policy);
  next.position += dt * human.speed * Eigen::Vector2d(std::cos(next.heading), std::sin(next.heading));
  if (!runtime.lane_captured && std::abs(lateral_offset(spec, next.position)) >= lane_width) {
    runtime.lane_captured = true;
    next.heading = runtime.base_heading;
  }
  return next;
}

AgentState reactive_human_step(const AgentState& human, const AgentState& robot, const OpinionParams& params,
                               const Eigen::Vector2d& goal, const Scenario& scenario, double dt) {
  AgentState current = human;
  const bool engaged = (human.position - robot.position).norm() > 0.0 &&
                       in_detection_window(relative_geometry(human.pose(), robot.pose(), goal), scenario);
  if (!engaged) reset_opinion(current);

  Vector state(kStride);
  state << current.position.x(), current.position.y(), current.heading, current.opinion.z, current.opinion.u;
  const Pose robot_pose = robot.pose();
  const std::array<Eigen::Index, 1> angles{2};
  const Vector next = rk4_step<double>(
      state, [&](const Vector& s) -> Vector {
        return controller_rhs(s, 0, robot_pose, goal, current.speed, params, engaged);
      },
      dt, angles);

  current.position = {next(0), next(1)};
  current.heading = next(2);
  current.opinion.z = next(3);
  current.opinion.u = next(4);
  if (const auto* hill = std::get_if<HillAttentionLaw>(&params.attention)) {
    current.opinion.u = engaged ? hill_attention_now(current.pose(), robot_pose, goal, *hill) : 0.0;
  }
  return current;
}

}  // namespace opinion_nav
