#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <system_error>

#include <CLI11.hpp>
#include <json.hpp>

#include "opinion_nav/analysis.hpp"
#include "opinion_nav/analysis_io.hpp"
#include "opinion_nav/experiments.hpp"
#include "opinion_nav/format.hpp"
#include "opinion_nav/rk4.hpp"
#include "opinion_nav/scenario_io.hpp"
#include "opinion_nav/service/server.hpp"
#include "opinion_nav/trial.hpp"

namespace fs = std::filesystem;
using namespace opinion_nav;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kInput = 2, kNumerical = 3, kEnvironment = 4 };

// Thrown for anything the filesystem or network refuses.
struct EnvironmentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> beta;
  std::optional<double> dt;
  std::string attention;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--seed", o.seed, "Override the scenario seed");
  cmd->add_option("--beta", o.beta, "Override the robot's beta (rad)");
  cmd->add_option("--dt", o.dt, "Override the integration step (s)");
  cmd->add_option("--attention", o.attention, "Attention law")->check(CLI::IsMember({"hill", "ode"}));
}

void apply(const Overrides& o, Scenario& s) {
  if (o.seed) s.seed = *o.seed;
  if (o.beta) s.robot.params.beta = *o.beta;
  if (o.dt) s.dt = *o.dt;
  auto& law = s.robot.params.attention;
  if (o.attention == "hill" && !std::holds_alternative<HillAttention<double>>(law)) law = HillAttention<double>{};
  if (o.attention == "ode" && !std::holds_alternative<OdeAttention<double>>(law)) law = OdeAttention<double>{};
  s.validate();
}

Scenario load_base(const std::string& path, const Overrides& o) {
  Scenario s = path.empty() ? head_on_scenario() : load_scenario(path);
  apply(o, s);
  return s;
}

/// Collects output files and commits them only once all of them rendered.
class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}

  void add(const fs::path& relative, const std::function<void(std::ostream&)>& render) {
    std::ostringstream os;
    render(os);
    files_.emplace_back(relative, os.str());
  }

  void commit() const {
    std::error_code ec;
    for (const auto& [rel, body] : files_) {
      const fs::path target = dir_ / rel;
      fs::create_directories(target.parent_path(), ec);
      if (ec) throw EnvironmentError("cannot create " + target.parent_path().string() + ": " + ec.message());
      const fs::path tmp = target.string() + ".partial";
      {
        std::ofstream out(tmp, std::ios::binary);
        out << body;
        if (!out.flush()) throw EnvironmentError("cannot write " + tmp.string());
      }
      fs::rename(tmp, target, ec);
      if (ec) throw EnvironmentError("cannot move " + tmp.string() + " into place: " + ec.message());
    }
  }

 private:
  fs::path dir_;
  std::vector<std::pair<fs::path, std::string>> files_;
};

const char* summary_outcome(Outcome o) {
  switch (o) {
    case Outcome::ReachedGoal:
      return "ReachedGoal";
    case Outcome::Collision:
      return "Collision";
    case Outcome::Timeout:
      break;
  }
  return "Timeout";
}

int cmd_simulate(const std::string& scenario_path, const std::string& out, const Overrides& o) {
  const Scenario scenario = load_base(scenario_path, o);
  const TrialResult result = run_trial(scenario);

  OutputSet files(out);
  files.add("trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, result); });
  files.add("metrics.json", [&](std::ostream& os) {
    json doc{{"scenario", scenario.name},
             {"seed", scenario.seed},
             {"outcome", to_string(result.outcome)},
             {"metrics", to_json(result.metrics)}};
    os << doc.dump(2) << '\n';
  });
  files.add("opinion.csv", [&](std::ostream& os) {
    os << "t,z,u,focal\n";
    for (std::size_t k = 0; k < result.times.size(); ++k) {
      const auto& r = result.robot_states[k];
      os << format_number(result.times[k]) << ',' << format_number(r.opinion.z) << ','
         << format_number(r.opinion.u) << ',';
      if (result.focal_index[k]) os << *result.focal_index[k];
      os << '\n';
    }
  });
  files.commit();

  const TrialMetrics& m = result.metrics;
  std::cout << "outcome=" << summary_outcome(result.outcome) << " path_length=" << format_number(m.path_length)
            << " min_separation=" << format_number(m.min_separation) << " passed=";
  if (m.passed_left.empty()) std::cout << "none";
  for (std::size_t j = 0; j < m.passed_left.size(); ++j) {
    std::cout << (j ? "," : "") << (m.passed_left[j] ? "left" : "right");
  }
  std::cout << '\n';
  return kOk;
}

int cmd_grid(const std::string& config_path, const std::string& scenario_path, const std::string& out,
             const Overrides& o) {
  GridConfig config;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw std::invalid_argument("cannot read grid config " + config_path);
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw std::invalid_argument(config_path + ": syntax error");
    try {
      config = grid_config_from_json(doc);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(config_path + ": " + e.what());
    }
  } else {
    config = grid_config_from_json(json::object());
  }
  const Scenario base = load_base(scenario_path, o);
  const GridOutcome grid = run_grid(base, config);

  OutputSet files(out);
  files.add("grid.csv", [&](std::ostream& os) { write_grid_table(os, grid.rows); });
  for (const GridTrial& t : grid.trials) {
    const std::string name =
        t.cell.name() + "_beta" + std::to_string(t.beta_index) + "_run" + std::to_string(t.run) + ".csv";
    files.add(fs::path("trajectories") / name, [&](std::ostream& os) { write_trajectory_csv(os, t.result); });
  }
  files.commit();
  std::cout << "trials=" << grid.trials.size() << " rows=" << grid.rows.size() << '\n';
  return kOk;
}

struct BifurcationArgs {
  double d = 0.1, alpha = 0.1, u_min = 0, u_max = 3, c = 0;
  std::size_t samples = 301;
};

int cmd_bifurcation(const BifurcationArgs& a, const std::string& out) {
  if (!(a.d > 0) || !(a.alpha > 0)) throw std::invalid_argument("need d > 0 and alpha > 0");
  if (!(a.u_max > a.u_min) || a.u_min < 0) throw std::invalid_argument("need 0 <= u-min < u-max");
  const auto diagram = pitchfork_diagram(a.d, a.alpha, linspace(a.u_min, a.u_max, a.samples), a.c);
  OutputSet files(out);
  files.add("pitchfork.csv", [&](std::ostream& os) { write_pitchfork_csv(os, diagram); });
  files.add("pitchfork.json", [&](std::ostream& os) { os << pitchfork_summary(diagram).dump(2) << '\n'; });
  files.commit();
  std::cout << "kind=" << (diagram.unfolded() ? "unfolded" : "symmetric")
            << " u_star=" << (diagram.u_star ? format_number(*diagram.u_star) : std::string("none"))
            << " branches=" << diagram.branches.size() << '\n';
  return kOk;
}

int cmd_sweep(const std::string& scenario_path, const std::string& parameter, const std::vector<double>& values,
              std::size_t seeds, const std::string& out, const Overrides& o) {
  const auto p = parse_sweep_parameter(parameter);
  if (!p) throw std::invalid_argument("unknown sweep parameter \"" + parameter + "\"");
  if (values.empty()) throw std::invalid_argument("--values must not be empty");
  if (seeds < 1) throw std::invalid_argument("--seeds must be >= 1");
  const Scenario base = load_base(scenario_path, o);
  SweepSpec spec{*p, values, seeds, base.seed};
  for (double v : values) (void)apply_sweep_value(base, *p, v);  // reject before running anything
  const auto rows = run_sweep(base, spec);
  OutputSet files(out);
  files.add("sweep.csv", [&](std::ostream& os) { write_sweep_table(os, rows); });
  files.commit();
  std::cout << "trials=" << rows.size() << '\n';
  return kOk;
}

int cmd_serve(const std::string& host, unsigned short port, const std::string& scenario_path,
              const std::string& log_dir) {
  service::ServerConfig config;
  config.address = host;
  config.port = port;
  if (scenario_path.empty()) throw std::invalid_argument("--scenario is required");
  config.default_scenario = load_scenario(scenario_path);
  config.scenario_dir = fs::path(scenario_path).parent_path();
  if (config.scenario_dir->empty()) config.scenario_dir = ".";
  if (!log_dir.empty()) config.log_dir = log_dir;
  std::unique_ptr<service::Server> server;
  try {
    server = std::make_unique<service::Server>(config);
  } catch (const std::system_error& e) {
    throw EnvironmentError("cannot listen on " + host + ":" + std::to_string(port) + ": " + e.what());
  }
  if (config.log_dir) {
    std::error_code ec;
    fs::create_directories(*config.log_dir, ec);
    if (ec) throw EnvironmentError("cannot create " + log_dir + ": " + ec.message());
  }
  std::cout << "listening on " << host << ":" << server->port() << std::endl;
  server->run(true);
  std::cout << "stopped" << std::endl;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Opinion-driven robot navigation: trials, grids, bifurcations and a live session server"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(service::version()));

  std::string scenario, out, config;
  Overrides overrides;

  auto* simulate = app.add_subcommand("simulate", "Run one trial");
  simulate->add_option("--scenario", scenario, "Scenario JSON")->required();
  simulate->add_option("--out", out, "Output directory")->required();
  add_overrides(simulate, overrides);

  auto* grid = app.add_subcommand("grid", "Run the bias x prompt x beta experiment grid");
  grid->add_option("--config", config, "Grid config JSON (defaults built in)");
  grid->add_option("--scenario", scenario, "Base scenario JSON (default: head-on)");
  grid->add_option("--out", out, "Output directory")->required();
  add_overrides(grid, overrides);

  BifurcationArgs bif;
  auto* bifurcation = app.add_subcommand("bifurcation", "Equilibria of the opinion field against attention");
  bifurcation->add_option("--d", bif.d, "Damping")->capture_default_str();
  bifurcation->add_option("--alpha", bif.alpha, "Self-reinforcement")->capture_default_str();
  bifurcation->add_option("--u-min", bif.u_min)->capture_default_str();
  bifurcation->add_option("--u-max", bif.u_max)->capture_default_str();
  bifurcation->add_option("--samples", bif.samples)->capture_default_str();
  bifurcation->add_option("--c", bif.c, "Constant input (bias)")->capture_default_str();
  bifurcation->add_option("--out", out, "Output directory")->required();

  std::string parameter;
  std::vector<double> values;
  std::size_t seeds = 1;
  auto* sweep = app.add_subcommand("sweep", "Sweep one parameter over several seeds");
  sweep->add_option("--scenario", scenario, "Base scenario JSON (default: head-on)");
  sweep->add_option("--parameter", parameter, "beta, b, R, u_hi or gamma")->required();
  sweep->add_option("--values", values, "Values to try")->required()->delimiter(',');
  sweep->add_option("--seeds", seeds, "Seeds per value")->capture_default_str();
  sweep->add_option("--out", out, "Output directory")->required();
  add_overrides(sweep, overrides);

  std::string host = "127.0.0.1", log_dir = "session-logs";
  unsigned short port = 8787;
  auto* serve = app.add_subcommand("serve", "Start the live session server");
  serve->add_option("--scenario", scenario, "Scenario with one externally driven human")->required();
  serve->add_option("--port", port)->capture_default_str();
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--log-dir", log_dir, "Where session logs go (empty disables)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInput;
  }

  try {
    if (*simulate) return cmd_simulate(scenario, out, overrides);
    if (*grid) return cmd_grid(config, scenario, out, overrides);
    if (*bifurcation) return cmd_bifurcation(bif, out);
    if (*sweep) return cmd_sweep(scenario, parameter, values, seeds, out, overrides);
    if (*serve) return cmd_serve(host, port, scenario, log_dir);
  } catch (const ScenarioLoadError& e) {
    for (const std::string& line : e.diagnostics()) std::cerr << line << '\n';
    return kInput;
  } catch (const NumericalBlowup& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const EnvironmentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kEnvironment;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kEnvironment;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kEnvironment;
  }
  return kInput;
}
