#include "opinion_nav/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace opinion_nav {

namespace {

double bias_value(char letter, double magnitude) {
  if (letter == 'L') return magnitude;
  if (letter == 'R') return -magnitude;
  return 0.0;
}

Prompt prompt_of(char letter) {
  if (letter == 'L') return Prompt::BearLeft;
  if (letter == 'R') return Prompt::BearRight;
  return Prompt::Straight;
}

double& attention_range(OpinionParams& params) {
  if (auto* hill = std::get_if<HillAttentionLaw>(&params.attention)) return hill->R;
  return std::get<OdeAttentionLaw>(params.attention).R;
}

}  // namespace

Scenario head_on_scenario() {
  Scenario s;
  s.name = "uu";
  s.robot.params.d = 0.5;
  s.robot.params.alpha = 0.1;
  s.robot.params.gamma = 3;
  s.robot.params.k = 1;
  s.robot.params.beta = kPi<double> / 4;
  s.robot.params.attention = OdeAttentionLaw{};
  s.humans.push_back(HumanSpec{});
  return s;
}

std::vector<GridCell> all_grid_cells() {
  std::vector<GridCell> out;
  for (char bias : {'L', 'U', 'R'}) {
    for (char action : {'L', 'U', 'R'}) out.push_back({bias, action});
  }
  return out;
}

std::optional<GridCell> parse_grid_cell(const std::string& name) {
  auto ok = [](char c) { return c == 'L' || c == 'U' || c == 'R'; };
  if (name.size() != 2 || !ok(name[0]) || !ok(name[1])) return std::nullopt;
  return GridCell{name[0], name[1]};
}

GridConfig grid_config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw std::invalid_argument(": grid config must be a JSON object");
  GridConfig config;
  config.betas = {kPi<double> / 6, kPi<double> / 4};
  for (const auto& item : doc.items()) {
    const std::string& key = item.key();
    const auto& v = item.value();
    if (key == "betas") {
      if (!v.is_array() || v.empty()) throw std::invalid_argument("/betas: expected a non-empty array of numbers");
      config.betas.clear();
      for (const auto& b : v) {
        if (!b.is_number() || !(b.get<double>() > 0)) throw std::invalid_argument("/betas: entries must be numbers > 0");
        config.betas.push_back(b.get<double>());
      }
    } else if (key == "cells") {
      if (!v.is_array() || v.empty()) throw std::invalid_argument("/cells: expected a non-empty array of cell names");
      config.cells.clear();
      for (const auto& c : v) {
        const auto cell = c.is_string() ? parse_grid_cell(c.get<std::string>()) : std::nullopt;
        if (!cell) throw std::invalid_argument("/cells: names are two letters from L, U, R (e.g. \"LU\")");
        config.cells.push_back(*cell);
      }
    } else if (key == "runs") {
      if (!v.is_number_unsigned() || v.get<std::size_t>() == 0) throw std::invalid_argument("/runs: must be >= 1");
      config.runs = v.get<std::size_t>();
    } else if (key == "seed") {
      if (!v.is_number_unsigned()) throw std::invalid_argument("/seed: expected a non-negative integer");
      config.seed = v.get<std::uint64_t>();
    } else if (key == "bias") {
      if (!v.is_number()) throw std::invalid_argument("/bias: expected a number");
      config.bias = v.get<double>();
    } else {
      throw std::invalid_argument("/" + key + ": unknown field");
    }
  }
  return config;
}

Scenario grid_scenario(const Scenario& base, const GridCell& cell, double beta, double bias, std::uint64_t seed) {
  if (base.humans.empty()) throw std::invalid_argument("grid base scenario needs at least one human");
  Scenario s = base;
  s.name = base.name + "_" + cell.name();
  s.seed = seed;
  s.robot.params.beta = beta;
  s.robot.params.b = bias_value(cell.robot_bias, bias);
  ScriptedPolicy policy;
  if (const auto* scripted = std::get_if<ScriptedPolicy>(&base.humans[0].policy)) policy = *scripted;
  policy.prompt = prompt_of(cell.human_action);
  s.humans[0].policy = policy;
  return s;
}

GridOutcome run_grid(const Scenario& base, const GridConfig& config, bool keep_series) {
  GridOutcome out;
  for (std::size_t bi = 0; bi < config.betas.size(); ++bi) {
    for (const GridCell& cell : config.cells) {
      for (std::size_t r = 0; r < config.runs; ++r) {
        GridTrial t;
        t.cell = cell;
        t.beta_index = bi;
        t.beta = config.betas[bi];
        t.run = r;
        t.seed = config.seed + r;
        out.trials.push_back(t);
      }
    }
  }

  parallel_for(out.trials.size(), [&](std::size_t i) {
    GridTrial& t = out.trials[i];
    t.result = run_trial(grid_scenario(base, t.cell, t.beta, config.bias, t.seed));
    if (!keep_series) {
      TrialResult slim;
      slim.metrics = t.result.metrics;
      slim.outcome = t.result.outcome;
      t.result = std::move(slim);
    }
  });

  std::map<std::string, double> baseline;
  std::size_t i = 0;
  for (std::size_t bi = 0; bi < config.betas.size(); ++bi) {
    for (const GridCell& cell : config.cells) {
      GridRow row;
      row.cell = cell.name();
      row.beta = config.betas[bi];
      std::size_t left = 0;
      for (std::size_t r = 0; r < config.runs; ++r, ++i) {
        const TrialResult& res = out.trials[i].result;
        ++row.trials;
        row.reached += res.outcome == Outcome::ReachedGoal;
        row.collisions += res.outcome == Outcome::Collision;
        row.mean_path_length += res.metrics.path_length;
        row.mean_max_curvature += res.metrics.max_curvature;
        row.mean_min_separation += res.metrics.min_separation;
        left += !res.metrics.passed_left.empty() && res.metrics.passed_left[0];
      }
      const double n = static_cast<double>(row.trials);
      row.mean_path_length /= n;
      row.mean_max_curvature /= n;
      row.mean_min_separation /= n;
      row.left_fraction = static_cast<double>(left) / n;
      if (bi == 0) baseline[row.cell] = row.mean_path_length;
      row.path_length_increase_pct = 100.0 * (row.mean_path_length / baseline[row.cell] - 1.0);
      out.rows.push_back(row);
    }
  }
  return out;
}

void write_grid_table(std::ostream& out, const std::vector<GridRow>& rows) {
  out << "cell,beta,trials,reached,collisions,mean_path_length,mean_max_curvature,mean_min_separation,"
         "left_fraction,path_length_increase_pct\n";
  for (const GridRow& r : rows) {
    out << r.cell << ',' << format_number(r.beta) << ',' << r.trials << ',' << r.reached << ',' << r.collisions << ','
        << format_number(r.mean_path_length) << ',' << format_number(r.mean_max_curvature) << ','
        << format_number(r.mean_min_separation) << ',' << format_number(r.left_fraction) << ','
        << format_number(r.path_length_increase_pct) << '\n';
  }
}

std::optional<SweepParameter> parse_sweep_parameter(const std::string& name) {
  if (name == "beta") return SweepParameter::Beta;
  if (name == "b") return SweepParameter::Bias;
  if (name == "R") return SweepParameter::AttentionRange;
  if (name == "u_hi") return SweepParameter::UHigh;
  if (name == "gamma") return SweepParameter::Gamma;
  return std::nullopt;
}

const char* to_string(SweepParameter parameter) {
  switch (parameter) {
    case SweepParameter::Beta:
      return "beta";
    case SweepParameter::Bias:
      return "b";
    case SweepParameter::AttentionRange:
      return "R";
    case SweepParameter::UHigh:
      return "u_hi";
    case SweepParameter::Gamma:
      break;
  }
  return "gamma";
}

Scenario apply_sweep_value(const Scenario& base, SweepParameter parameter, double value) {
  Scenario s = base;
  OpinionParams& p = s.robot.params;
  switch (parameter) {
    case SweepParameter::Beta:
      p.beta = value;
      break;
    case SweepParameter::Bias:
      p.b = value;
      break;
    case SweepParameter::AttentionRange:
      attention_range(p) = value;
      break;
    case SweepParameter::UHigh: {
      auto* hill = std::get_if<HillAttentionLaw>(&p.attention);
      if (!hill) throw std::invalid_argument("u_hi sweeps need the hill attention law");
      hill->u_hi = value;
      break;
    }
    case SweepParameter::Gamma:
      p.gamma = value;
      break;
  }
  return s;
}

std::vector<SweepRow> run_sweep(const Scenario& base, const SweepSpec& spec) {
  if (spec.values.empty()) throw std::invalid_argument("sweep needs at least one value");
  if (spec.seeds == 0) throw std::invalid_argument("sweep needs at least one seed");
  std::vector<Scenario> scenarios;
  std::vector<SweepRow> rows;
  for (double value : spec.values) {
    const Scenario s = apply_sweep_value(base, spec.parameter, value);
    s.validate();
    for (std::size_t r = 0; r < spec.seeds; ++r) {
      scenarios.push_back(s);
      scenarios.back().seed = spec.seed + r;
      rows.push_back(SweepRow{value, spec.seed + r, Outcome::Timeout, {}});
    }
  }
  parallel_for(rows.size(), [&](std::size_t i) {
    const TrialResult res = run_trial(scenarios[i]);
    rows[i].outcome = res.outcome;
    rows[i].metrics = res.metrics;
  });
  return rows;
}

void write_sweep_table(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "value,seed,outcome,path_length,max_curvature,min_separation,passed_left,time_to_goal\n";
  for (const SweepRow& r : rows) {
    const bool left = !r.metrics.passed_left.empty() && r.metrics.passed_left[0];
    out << format_number(r.value) << ',' << r.seed << ',' << to_string(r.outcome) << ','
        << format_number(r.metrics.path_length) << ',' << format_number(r.metrics.max_curvature) << ','
        << format_number(r.metrics.min_separation) << ',' << (left ? 1 : 0) << ','
        << (r.metrics.time_to_goal ? format_number(*r.metrics.time_to_goal) : "") << '\n';
  }
}

std::size_t worker_count() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* cap = std::getenv("OPINION_NAV_THREADS")) {
    char* end = nullptr;
    const unsigned long parsed = std::strtoul(cap, &end, 10);
    if (end != cap && *end == '\0' && parsed > 0) n = std::min<std::size_t>(n, parsed);
  }
  return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& job) {
  const std::size_t workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace opinion_nav
