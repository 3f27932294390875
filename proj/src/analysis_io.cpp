#include "opinion_nav/analysis_io.hpp"

#include "opinion_nav/format.hpp"

namespace opinion_nav {

void write_pitchfork_csv(std::ostream& out, const PitchforkDiagram<double>& diagram) {
  out << "u,z,stable,branch_id\n";
  for (std::size_t b = 0; b < diagram.branches.size(); ++b) {
    for (const auto& p : diagram.branches[b].points) {
      out << format_number(p.u) << ',' << format_number(p.z) << ',' << (p.stable ? 1 : 0) << ',' << b << '\n';
    }
  }
}

nlohmann::json pitchfork_summary(const PitchforkDiagram<double>& diagram) {
  return {{"u_star", diagram.u_star ? nlohmann::json(*diagram.u_star) : nlohmann::json(nullptr)},
          {"c", diagram.c},
          {"params", {{"d", diagram.d}, {"alpha", diagram.alpha}}},
          {"kind", diagram.unfolded() ? "unfolded" : "symmetric"},
          {"branches", diagram.branches.size()},
          {"u_min", diagram.u_samples.front()},
          {"u_max", diagram.u_samples.back()},
          {"samples", diagram.u_samples.size()}};
}

const char* to_string(Preference preference) {
  switch (preference) {
    case Preference::Left:
      return "left";
    case Preference::Right:
      return "right";
    case Preference::Neutral:
      break;
  }
  return "neutral";
}

}  // namespace opinion_nav
