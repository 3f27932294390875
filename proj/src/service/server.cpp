#include "opinion_nav/service/server.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <iostream>
#include <map>
#include <set>

#include <boost/asio.hpp>
#include <boost/beast.hpp>

#include "opinion_nav/scenario_io.hpp"

#ifndef OPINION_NAV_VERSION
#define OPINION_NAV_VERSION "0.0.0"
#endif

namespace opinion_nav::service {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using nlohmann::json;

const char* version() { return OPINION_NAV_VERSION; }

namespace {

// Never step more than this much wall time at once after a stall.
constexpr double kMaxCatchUp = 0.25;

bool valid_scenario_name(const std::string& name) {
  return !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

}  // namespace

class Connection;

struct Server::Impl : std::enable_shared_from_this<Server::Impl> {
  explicit Impl(ServerConfig cfg) : config(std::move(cfg)), acceptor(io), signals(io) {}

  ServerConfig config;
  asio::io_context io;
  tcp::acceptor acceptor;
  asio::signal_set signals;
  std::set<std::shared_ptr<Connection>> connections;
  std::uint64_t next_session = 1;
  bool stopping = false;

  void accept();
  void shutdown();
  Scenario scenario_named(const std::string& name) const;
  void save_log(const Session& session) const;
  http::response<http::string_body> handle_http(const http::request<http::string_body>& req) const;
};

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(std::shared_ptr<Server::Impl> server, tcp::socket socket)
      : server_(std::move(server)), ws_(std::move(socket)), timer_(server_->io) {}

  void start(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return self->close();
      self->open_session(json::object());
      self->read();
      self->last_ = std::chrono::steady_clock::now();
      self->schedule();
    });
  }

  void close() {
    if (closed_) return;
    closed_ = true;
    timer_.cancel();
    for (auto& [id, session] : sessions_) server_->save_log(*session);
    sessions_.clear();
    if (ws_.is_open() && outbox_.empty()) {
      ws_.async_close(websocket::close_code::going_away, [self = shared_from_this()](beast::error_code) {});
    } else {
      beast::error_code ignored;
      beast::get_lowest_layer(ws_).socket().close(ignored);
    }
    server_->connections.erase(shared_from_this());
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->close();
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->handle(text);
      self->read();
    });
  }

  void handle(const std::string& text) {
    const json message = json::parse(text, nullptr, false);
    if (message.is_discarded() || !message.is_object()) return send({{"type", "error"}, {"message", "malformed JSON"}});
    const std::string type = message.value("type", "");
    if (type == "open") return open_session(message);
    Session* session = find_session(message);
    if (!session) {
      return send({{"type", "error"}, {"message", "unknown session"}});
    }
    if (type == "input") return send(session->apply_input(message));
    if (type == "close") return end_session(session->id());
    send({{"type", "error"}, {"session", session->id()}, {"message", "unknown message type \"" + type + "\""}});
  }

  Session* find_session(const json& message) {
    if (message.contains("session")) {
      if (!message.at("session").is_string()) return nullptr;
      auto it = sessions_.find(message.at("session").get<std::string>());
      return it == sessions_.end() ? nullptr : it->second.get();
    }
    return latest_.empty() || !sessions_.count(latest_) ? nullptr : sessions_.at(latest_).get();
  }

  void open_session(const json& message) {
    try {
      Scenario scenario = server_->config.default_scenario;
      if (message.contains("scenario")) {
        if (!message.at("scenario").is_string()) throw std::invalid_argument("\"scenario\" must be a string");
        scenario = server_->scenario_named(message.at("scenario").get<std::string>());
      }
      const std::string id = "s" + std::to_string(server_->next_session++);
      auto session = std::make_unique<Session>(id, std::move(scenario), server_->config.session);
      send({{"type", "opened"}, {"session", id}, {"scenario", session->scenario().name}, {"dt", session->tick_seconds()}});
      send(session->state_message());
      latest_ = id;
      sessions_.emplace(id, std::move(session));
    } catch (const std::exception& e) {
      send({{"type", "error"}, {"message", std::string("cannot open session: ") + e.what()}});
    }
  }

  void end_session(const std::string& id) {
    auto it = sessions_.find(id);
    if (it == sessions_.end()) return;
    server_->save_log(*it->second);
    sessions_.erase(it);
  }

  void schedule() {
    timer_.expires_after(std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(1.0 / server_->config.session.sim_rate)));
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (ec || self->closed_) return;
      self->advance();
      self->schedule();
    });
  }

  // Fixed-step accumulator: wall time in, whole ticks out.
  void advance() {
    const auto now = std::chrono::steady_clock::now();
    accumulator_ += std::min(kMaxCatchUp, std::chrono::duration<double>(now - last_).count());
    last_ = now;
    const double dt = 1.0 / server_->config.session.sim_rate;
    while (accumulator_ >= dt) {
      accumulator_ -= dt;
      std::vector<std::string> done;
      for (auto& [id, session] : sessions_) {
        for (json& m : session->tick()) send(std::move(m));
        if (session->finished()) done.push_back(id);
      }
      for (const std::string& id : done) end_session(id);
    }
  }

  void send(json message) {
    if (closed_) return;
    outbox_.push_back(message.dump());
    if (outbox_.size() == 1) write();
  }

  void write() {
    ws_.text(true);
    ws_.async_write(asio::buffer(outbox_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->close();
      self->outbox_.pop_front();
      if (!self->outbox_.empty()) self->write();
    });
  }

  std::shared_ptr<Server::Impl> server_;
  websocket::stream<beast::tcp_stream> ws_;
  asio::steady_timer timer_;
  beast::flat_buffer buffer_;
  std::deque<std::string> outbox_;
  std::map<std::string, std::unique_ptr<Session>> sessions_;
  std::string latest_;
  std::chrono::steady_clock::time_point last_;
  double accumulator_ = 0;
  bool closed_ = false;
};

namespace {

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(std::shared_ptr<Server::Impl> server, tcp::socket socket)
      : server_(std::move(server)), stream_(std::move(socket)) {}

  void start() {
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (websocket::is_upgrade(self->req_)) {
        if (self->server_->stopping) return;
        self->stream_.expires_never();
        auto conn = std::make_shared<Connection>(self->server_, self->stream_.release_socket());
        self->server_->connections.insert(conn);
        conn->start(std::move(self->req_));
        return;
      }
      self->res_ = self->server_->handle_http(self->req_);
      http::async_write(self->stream_, self->res_, [self](beast::error_code, std::size_t) {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
      });
    });
  }

 private:
  std::shared_ptr<Server::Impl> server_;
  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  http::response<http::string_body> res_;
};

}  // namespace

void Server::Impl::accept() {
  acceptor.async_accept([self = shared_from_this()](beast::error_code ec, tcp::socket socket) {
    if (ec || self->stopping) return;
    std::make_shared<HttpConnection>(self, std::move(socket))->start();
    self->accept();
  });
}

void Server::Impl::shutdown() {
  if (stopping) return;
  stopping = true;
  beast::error_code ignored;
  acceptor.close(ignored);
  signals.cancel(ignored);
  auto open = connections;
  for (const auto& conn : open) conn->close();
  // Let the close frames go out, then give up.
  auto timer = std::make_shared<asio::steady_timer>(io, std::chrono::milliseconds(200));
  timer->async_wait([timer, this](beast::error_code) { io.stop(); });
}

Scenario Server::Impl::scenario_named(const std::string& name) const {
  if (!config.scenario_dir || !valid_scenario_name(name)) throw std::invalid_argument("unknown scenario \"" + name + "\"");
  const auto path = *config.scenario_dir / (name + ".json");
  if (!std::filesystem::exists(path)) throw std::invalid_argument("unknown scenario \"" + name + "\"");
  return load_scenario(path);
}

void Server::Impl::save_log(const Session& session) const {
  if (!config.log_dir) return;
  try {
    session.write_log(*config.log_dir / (session.id() + ".jsonl"));
  } catch (const std::exception& e) {
    std::cerr << "warning: " << e.what() << '\n';
  }
}

http::response<http::string_body> Server::Impl::handle_http(const http::request<http::string_body>& req) const {
  http::response<http::string_body> res;
  res.version(req.version());
  res.keep_alive(false);
  res.set(http::field::content_type, "application/json");
  res.set(http::field::access_control_allow_origin, "*");
  json body;
  if (req.method() != http::verb::get) {
    res.result(http::status::method_not_allowed);
    body = {{"error", "method not allowed"}};
  } else if (req.target() == "/health") {
    body = {{"version", version()}};
  } else if (req.target() == "/scenarios") {
    json list = json::array();
    if (config.scenario_dir && std::filesystem::is_directory(*config.scenario_dir)) {
      std::vector<std::filesystem::path> files;
      for (const auto& entry : std::filesystem::directory_iterator(*config.scenario_dir)) {
        if (entry.path().extension() == ".json") files.push_back(entry.path());
      }
      std::sort(files.begin(), files.end());
      for (const auto& path : files) {
        try {
          (void)load_scenario(path);
          list.push_back(path.stem().string());
        } catch (const std::exception&) {
          // unreadable files are simply not offered
        }
      }
    }
    body = list;
  } else {
    res.result(http::status::not_found);
    body = {{"error", "not found"}};
  }
  res.body() = body.dump();
  res.prepare_payload();
  return res;
}

Server::Server(ServerConfig config) : impl_(std::make_shared<Impl>(std::move(config))) {
  // Surface a bad default scenario before we start listening.
  Session probe("probe", impl_->config.default_scenario, impl_->config.session);
  try {
    const tcp::endpoint endpoint(asio::ip::make_address(impl_->config.address), impl_->config.port);
    impl_->acceptor.open(endpoint.protocol());
    impl_->acceptor.set_option(asio::socket_base::reuse_address(true));
    impl_->acceptor.bind(endpoint);
    impl_->acceptor.listen();
  } catch (const boost::system::system_error& e) {
    throw std::system_error(std::error_code(e.code().value(), std::system_category()), e.what());
  }
}

Server::~Server() = default;

unsigned short Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::run(bool handle_signals) {
  if (handle_signals) {
    impl_->signals.add(SIGINT);
    impl_->signals.add(SIGTERM);
    impl_->signals.async_wait([impl = impl_](beast::error_code ec, int) {
      if (!ec) impl->shutdown();
    });
  }
  impl_->accept();
  impl_->io.run();
  impl_->connections.clear();
}

void Server::stop() {
  asio::post(impl_->io, [impl = impl_] { impl->shutdown(); });
}

}  // namespace opinion_nav::service
