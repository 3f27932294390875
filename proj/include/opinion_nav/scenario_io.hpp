#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "opinion_nav/scenario.hpp"

namespace opinion_nav {

/// Parse, type or validation failure while loading a scenario document.
/// Every diagnostic is prefixed with "<source>:<line>:".
class ScenarioLoadError : public std::runtime_error {
 public:
  explicit ScenarioLoadError(std::vector<std::string> diagnostics);
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<std::string> diagnostics_;
};

nlohmann::json to_json(const OpinionParams& params);
nlohmann::json to_json(const Scenario& scenario);

/// Throws ValidationError (messages keyed by JSON pointer) on missing or
/// mistyped fields and on invariant violations.
Scenario scenario_from_json(const nlohmann::json& doc);

Scenario parse_scenario(const std::string& text, const std::string& source = "<scenario>");
Scenario load_scenario(const std::filesystem::path& path);

/// 1-based line of the value addressed by `pointer` in `text`; 0 when absent.
std::size_t locate_json_pointer(const std::string& text, const std::string& pointer);

}  // namespace opinion_nav
