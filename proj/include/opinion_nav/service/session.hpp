#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "opinion_nav/trial.hpp"

namespace opinion_nav::service {

struct SessionConfig {
  double sim_rate = 60;        // Hz; sets the integration step
  double broadcast_rate = 30;  // Hz; must divide sim_rate
};

struct HumanInput {
  enum class Mode { Heading, Target, Stop };
  Mode mode = Mode::Stop;
  double theta = 0;
  Eigen::Vector2d target = Eigen::Vector2d::Zero();
  double speed_fraction = 1;
};

struct ParsedInput {
  HumanInput input;
  bool clamped = false;
};

/// Reads a client "input" message. Throws std::invalid_argument on bad fields.
ParsedInput parse_input(const nlohmann::json& message);

/// One robot against one externally steered human, stepped tick by tick.
/// Not thread-safe: the owner serializes calls.
class Session {
 public:
  /// Throws ValidationError for invalid scenarios and std::invalid_argument
  /// unless exactly one human is externally driven.
  Session(std::string id, Scenario scenario, SessionConfig config = {});

  const std::string& id() const { return id_; }
  const Scenario& scenario() const { return scenario_; }
  const World& world() const { return world_; }
  std::uint64_t tick_count() const { return world_.tick; }
  bool finished() const { return finished_; }
  double tick_seconds() const { return scenario_.dt; }

  /// Queues input for the next tick and returns the acknowledgement message.
  nlohmann::json apply_input(const nlohmann::json& message);

  /// Advances one tick. Returns the messages to send: a state message on
  /// broadcast ticks, then a terminal message when the run ends.
  std::vector<nlohmann::json> tick();

  nlohmann::json state_message() const;

  /// Append-only JSONL records {tick, type, payload}.
  const std::vector<std::string>& log() const { return log_; }
  void write_log(const std::filesystem::path& path) const;

 private:
  void append_log(const char* type, const nlohmann::json& payload);
  nlohmann::json finish(Outcome outcome);

  std::string id_;
  Scenario scenario_;
  SessionConfig config_;
  std::size_t external_index_ = 0;
  std::uint64_t broadcast_every_ = 2;
  World world_;
  std::optional<HumanInput> input_;
  bool finished_ = false;
  std::vector<AgentState> robot_series_;
  std::vector<std::vector<AgentState>> human_series_;
  std::vector<std::string> log_;
};

/// Re-feeds the logged inputs of a session into a fresh one and returns the
/// state and terminal messages it produces, in order.
std::vector<nlohmann::json> replay(const Scenario& scenario, const std::vector<std::string>& log,
                                   SessionConfig config = {});

}  // namespace opinion_nav::service
