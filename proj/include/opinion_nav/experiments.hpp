#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "opinion_nav/trial.hpp"

namespace opinion_nav {

/// Head-on base setup: robot (0,0)->(0,6.1) at 0.7 m/s, one straight-walking
/// human (0,6.1)->(0,-1) at 1.09 m/s, exponential attention law with R = 11.
Scenario head_on_scenario();

/// Robot bias letter (L: +b, U: 0, R: -b) followed by the human prompt letter.
struct GridCell {
  char robot_bias = 'U';
  char human_action = 'U';

  std::string name() const { return {robot_bias, human_action}; }
};

std::vector<GridCell> all_grid_cells();
std::optional<GridCell> parse_grid_cell(const std::string& name);

struct GridConfig {
  std::vector<double> betas;
  std::vector<GridCell> cells = all_grid_cells();
  std::size_t runs = 5;
  std::uint64_t seed = 0;  // run r of every cell uses seed + r
  double bias = 0.5;
};

/// Throws std::invalid_argument with a JSON pointer on bad input.
GridConfig grid_config_from_json(const nlohmann::json& doc);

/// Applies a cell's robot bias and human prompt to the first human of `base`.
Scenario grid_scenario(const Scenario& base, const GridCell& cell, double beta, double bias, std::uint64_t seed);

struct GridTrial {
  GridCell cell;
  std::size_t beta_index = 0;
  double beta = 0;
  std::size_t run = 0;
  std::uint64_t seed = 0;
  TrialResult result;
};

struct GridRow {
  std::string cell;
  double beta = 0;
  std::size_t trials = 0;
  std::size_t reached = 0;
  std::size_t collisions = 0;
  double mean_path_length = 0;
  double mean_max_curvature = 0;
  double mean_min_separation = 0;
  double left_fraction = 0;
  // Relative to the same cell at the first beta in the config.
  double path_length_increase_pct = 0;
};

struct GridOutcome {
  std::vector<GridTrial> trials;  // ordered beta, cell, run
  std::vector<GridRow> rows;      // ordered beta, cell
};

GridOutcome run_grid(const Scenario& base, const GridConfig& config, bool keep_series = true);

void write_grid_table(std::ostream& out, const std::vector<GridRow>& rows);

enum class SweepParameter { Beta, Bias, AttentionRange, UHigh, Gamma };

std::optional<SweepParameter> parse_sweep_parameter(const std::string& name);
const char* to_string(SweepParameter parameter);

struct SweepSpec {
  SweepParameter parameter = SweepParameter::Beta;
  std::vector<double> values;
  std::size_t seeds = 1;
  std::uint64_t seed = 0;
};

/// Throws std::invalid_argument when the value cannot be applied (e.g. u_hi
/// with the exponential attention law).
Scenario apply_sweep_value(const Scenario& base, SweepParameter parameter, double value);

struct SweepRow {
  double value = 0;
  std::uint64_t seed = 0;
  Outcome outcome = Outcome::Timeout;
  TrialMetrics metrics;
};

std::vector<SweepRow> run_sweep(const Scenario& base, const SweepSpec& spec);

void write_sweep_table(std::ostream& out, const std::vector<SweepRow>& rows);

/// Worker count: hardware concurrency, capped by OPINION_NAV_THREADS.
std::size_t worker_count();

/// Runs job(i) for i in [0, n) on a small pool; rethrows the first failure.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& job);

}  // namespace opinion_nav
