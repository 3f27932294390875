#pragma once

#include <ostream>

#include <json.hpp>

#include "opinion_nav/analysis.hpp"

namespace opinion_nav {

/// Columns u,z,stable,branch_id; rows grouped by branch.
void write_pitchfork_csv(std::ostream& out, const PitchforkDiagram<double>& diagram);

/// {u_star, c, params: {d, alpha}, kind: symmetric|unfolded, branches}
nlohmann::json pitchfork_summary(const PitchforkDiagram<double>& diagram);

const char* to_string(Preference preference);

}  // namespace opinion_nav
