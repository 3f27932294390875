#pragma once

#include <span>

#include <Eigen/Core>

namespace opinion_nav {

/// Sum of segment lengths. Needs at least 2 samples.
double path_length(std::span<const Eigen::Vector2d> points);

/// Largest circumscribed-circle curvature over consecutive triples; triples
/// with a segment shorter than 1e-6 m are skipped. Needs at least 3 samples.
double max_curvature(std::span<const Eigen::Vector2d> points);

/// Smallest distance between synchronized samples of two trajectories.
double min_separation(std::span<const Eigen::Vector2d> a, std::span<const Eigen::Vector2d> b);

}  // namespace opinion_nav
