#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "opinion_nav/service/session.hpp"

namespace opinion_nav::service {

struct ServerConfig {
  std::string address = "127.0.0.1";
  unsigned short port = 8787;  // 0 picks a free port
  Scenario default_scenario;
  std::optional<std::filesystem::path> scenario_dir;  // served by GET /scenarios and "open"
  std::optional<std::filesystem::path> log_dir;       // one <session>.jsonl per session
  SessionConfig session;
};

/// HTTP + WebSocket front end. Everything runs on the thread that calls run().
class Server {
 public:
  /// Binds immediately; throws std::system_error when the port is unavailable.
  explicit Server(ServerConfig config);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  unsigned short port() const;

  /// Serves until stop() or SIGINT/SIGTERM (when handle_signals is set).
  void run(bool handle_signals = false);

  /// Safe from any thread. Open sessions get their logs flushed.
  void stop();

  struct Impl;  // defined next to the connection types

 private:
  std::shared_ptr<Impl> impl_;
};

const char* version();

}  // namespace opinion_nav::service
