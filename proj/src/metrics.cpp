#include "opinion_nav/metrics.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace opinion_nav {

double path_length(std::span<const Eigen::Vector2d> points) {
  if (points.size() < 2) throw std::invalid_argument("path_length needs at least 2 samples");
  double total = 0;
  for (std::size_t i = 1; i < points.size(); ++i) total += (points[i] - points[i - 1]).norm();
  return total;
}

double max_curvature(std::span<const Eigen::Vector2d> points) {
  if (points.size() < 3) throw std::invalid_argument("max_curvature needs at least 3 samples");
  constexpr double kMinSegment = 1e-6;
  double best = 0;
  for (std::size_t i = 1; i + 1 < points.size(); ++i) {
    const Eigen::Vector2d ab = points[i] - points[i - 1];
    const Eigen::Vector2d bc = points[i + 1] - points[i];
    const Eigen::Vector2d ac = points[i + 1] - points[i - 1];
    const double a = ab.norm(), b = bc.norm(), c = ac.norm();
    if (a < kMinSegment || b < kMinSegment) continue;
    // kappa = 4 * area / (a b c) = 2 |ab x bc| / (a b c)
    const double cross = ab.x() * bc.y() - ab.y() * bc.x();
    if (c == 0.0) continue;
    best = std::max(best, 2.0 * std::abs(cross) / (a * b * c));
  }
  return best;
}

double min_separation(std::span<const Eigen::Vector2d> a, std::span<const Eigen::Vector2d> b) {
  if (a.empty() || a.size() != b.size()) {
    throw std::invalid_argument("min_separation needs two non-empty trajectories of equal length");
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.size(); ++i) best = std::min(best, (a[i] - b[i]).norm());
  return best;
}

}  // namespace opinion_nav
