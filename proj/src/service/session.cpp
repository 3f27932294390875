#include "opinion_nav/service/session.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "opinion_nav/rk4.hpp"

namespace opinion_nav::service {

using nlohmann::json;

namespace {

double number_field(const json& message, const char* key) {
  if (!message.contains(key) || !message.at(key).is_number()) {
    throw std::invalid_argument(std::string("input needs a numeric \"") + key + "\"");
  }
  const double value = message.at(key).get<double>();
  if (!std::isfinite(value)) throw std::invalid_argument(std::string("\"") + key + "\" must be finite");
  return value;
}

json agent_json(const AgentState& a) {
  return {{"x", a.position.x()}, {"y", a.position.y()}, {"theta", a.heading}};
}

}  // namespace

ParsedInput parse_input(const json& message) {
  if (!message.is_object()) throw std::invalid_argument("input must be a JSON object");
  const std::string mode = message.value("mode", "");
  ParsedInput out;
  if (mode == "heading") {
    out.input.mode = HumanInput::Mode::Heading;
    out.input.theta = number_field(message, "theta");
  } else if (mode == "target") {
    out.input.mode = HumanInput::Mode::Target;
    out.input.target = {number_field(message, "x"), number_field(message, "y")};
  } else if (mode == "stop") {
    out.input.mode = HumanInput::Mode::Stop;
  } else {
    throw std::invalid_argument("input mode must be heading, target or stop");
  }
  if (message.contains("speed_fraction")) {
    const double raw = number_field(message, "speed_fraction");
    out.input.speed_fraction = std::clamp(raw, 0.0, 1.0);
    out.clamped = out.input.speed_fraction != raw;
  }
  return out;
}

Session::Session(std::string id, Scenario scenario, SessionConfig config)
    : id_(std::move(id)), scenario_(std::move(scenario)), config_(config) {
  if (!(config_.sim_rate > 0) || !(config_.broadcast_rate > 0) || config_.broadcast_rate > config_.sim_rate) {
    throw std::invalid_argument("need 0 < broadcast_rate <= sim_rate");
  }
  const double ratio = config_.sim_rate / config_.broadcast_rate;
  if (std::abs(ratio - std::round(ratio)) > 1e-9) throw std::invalid_argument("broadcast_rate must divide sim_rate");
  broadcast_every_ = static_cast<std::uint64_t>(std::llround(ratio));
  scenario_.dt = 1.0 / config_.sim_rate;
  scenario_.validate();
  if (scenario_.count_external() != 1) {
    throw std::invalid_argument("scenario \"" + scenario_.name + "\" must have exactly one externally driven human (has " +
                                std::to_string(scenario_.count_external()) + ")");
  }
  for (std::size_t j = 0; j < scenario_.humans.size(); ++j) {
    if (std::holds_alternative<ExternalPolicy>(scenario_.humans[j].policy)) external_index_ = j;
  }
  world_ = initial_world(scenario_);
  robot_series_.push_back(world_.robot);
  human_series_.resize(world_.humans.size());
  for (std::size_t j = 0; j < world_.humans.size(); ++j) human_series_[j].push_back(world_.humans[j]);
  append_log("state", state_message());
}

json Session::apply_input(const json& message) {
  if (finished_) return {{"type", "error"}, {"session", id_}, {"message", "session has finished"}};
  ParsedInput parsed;
  try {
    parsed = parse_input(message);
  } catch (const std::invalid_argument& e) {
    return {{"type", "error"}, {"session", id_}, {"message", e.what()}};
  }
  input_ = parsed.input;
  json logged = message;
  logged.erase("session");
  append_log("input", logged);
  return {{"type", "ack"},
          {"session", id_},
          {"tick", world_.tick + 1},
          {"speed_fraction", parsed.input.speed_fraction},
          {"clamped", parsed.clamped}};
}

std::vector<json> Session::tick() {
  if (finished_) return {};
  const HumanSpec& spec = scenario_.humans[external_index_];
  HumanRuntime& rt = world_.runtime[external_index_];
  const AgentState& human = world_.humans[external_index_];
  if (input_) {
    switch (input_->mode) {
      case HumanInput::Mode::Heading:
        rt.commanded_heading = input_->theta;
        rt.commanded_speed = input_->speed_fraction * spec.speed;
        break;
      case HumanInput::Mode::Target: {
        const Eigen::Vector2d to = input_->target - human.position;
        if (to.norm() > 0) rt.commanded_heading = std::atan2(to.y(), to.x());
        rt.commanded_speed = input_->speed_fraction * spec.speed;
        break;
      }
      case HumanInput::Mode::Stop:
        rt.commanded_speed = 0;
        break;
    }
  }

  std::vector<json> out;
  try {
    step_world(world_, scenario_);
  } catch (const std::exception& e) {
    finished_ = true;
    json error{{"type", "error"}, {"session", id_}, {"message", e.what()}};
    append_log("terminal", error);
    out.push_back(error);
    return out;
  }
  robot_series_.push_back(world_.robot);
  for (std::size_t j = 0; j < world_.humans.size(); ++j) human_series_[j].push_back(world_.humans[j]);

  if (world_.tick % broadcast_every_ == 0) {
    json state = state_message();
    append_log("state", state);
    out.push_back(std::move(state));
  }
  std::optional<Outcome> outcome = terminal_outcome(world_, scenario_);
  if (!outcome && world_.time >= scenario_.max_time - 1e-9) outcome = Outcome::Timeout;
  if (outcome) out.push_back(finish(*outcome));
  return out;
}

json Session::finish(Outcome outcome) {
  finished_ = true;
  std::optional<double> time_to_goal;
  if (outcome == Outcome::ReachedGoal) time_to_goal = world_.time;
  const TrialMetrics metrics = compute_metrics(scenario_, robot_series_, human_series_, time_to_goal);
  json done{{"type", "done"}, {"session", id_}, {"outcome", to_string(outcome)}, {"metrics", to_json(metrics)}};
  append_log("terminal", done);
  return done;
}

json Session::state_message() const {
  json humans = json::array();
  for (const AgentState& h : world_.humans) humans.push_back(agent_json(h));
  json robot = agent_json(world_.robot);
  robot["z"] = world_.robot.opinion.z;
  robot["u"] = world_.robot.opinion.u;
  robot["focal"] = world_.focal ? json(*world_.focal) : json(nullptr);
  return {{"type", "state"},
          {"session", id_},
          {"t", world_.time},
          {"robot", robot},
          {"humans", humans},
          {"goal", {{"x", scenario_.robot.goal.x()}, {"y", scenario_.robot.goal.y()}}}};
}

void Session::append_log(const char* type, const json& payload) {
  log_.push_back(json{{"tick", world_.tick}, {"type", type}, {"payload", payload}}.dump());
}

void Session::write_log(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write session log " + path.string());
  for (const std::string& line : log_) out << line << '\n';
}

std::vector<json> replay(const Scenario& scenario, const std::vector<std::string>& log, SessionConfig config) {
  std::string id = "replay";
  std::vector<json> inputs;
  for (const std::string& line : log) {
    const json entry = json::parse(line);
    if (entry.at("type") == "input") inputs.push_back(entry);
    if (entry.at("type") == "state" && entry.at("tick") == 0) id = entry.at("payload").at("session");
  }
  Session session(id, scenario, config);
  std::vector<json> out{session.state_message()};
  std::size_t next = 0;
  while (!session.finished()) {
    // Inputs logged at tick k arrived before tick k + 1 ran.
    while (next < inputs.size() && inputs[next].at("tick").get<std::uint64_t>() <= session.tick_count()) {
      session.apply_input(inputs[next++].at("payload"));
    }
    for (json& m : session.tick()) out.push_back(std::move(m));
  }
  return out;
}

}  // namespace opinion_nav::service
