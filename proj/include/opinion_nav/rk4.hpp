#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

#include "opinion_nav/angles.hpp"

namespace opinion_nav {

/// Raised when a right-hand side evaluation produces NaN or infinity.
class NumericalBlowup : public std::runtime_error {
 public:
  NumericalBlowup(Eigen::Index component, int stage, std::string what)
      : std::runtime_error(std::move(what)), component_(component), stage_(stage) {}

  Eigen::Index component() const { return component_; }
  int stage() const { return stage_; }

 private:
  Eigen::Index component_;
  int stage_;
};

namespace detail {

template <typename Derived>
void check_finite(const Eigen::MatrixBase<Derived>& slope, int stage) {
  for (Eigen::Index i = 0; i < slope.size(); ++i) {
    if (!std::isfinite(slope(i))) {
      throw NumericalBlowup(i, stage,
                            "non-finite rhs in component " + std::to_string(i) + " at RK4 stage " +
                                std::to_string(stage));
    }
  }
}

}  // namespace detail

/// One classical fourth-order Runge-Kutta step of dx/dt = rhs(x). Components
/// listed in `angles` are wrapped to (-pi, pi] after the update.
template <typename Scalar, typename Rhs>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> rk4_step(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& state, Rhs&& rhs,
                                                  Scalar dt, std::span<const Eigen::Index> angles = {}) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  if (!(dt > 0)) throw std::invalid_argument("rk4_step: dt must be > 0");

  const Vector k1 = rhs(state);
  detail::check_finite(k1, 1);
  const Vector k2 = rhs(Vector(state + (dt / 2) * k1));
  detail::check_finite(k2, 2);
  const Vector k3 = rhs(Vector(state + (dt / 2) * k2));
  detail::check_finite(k3, 3);
  const Vector k4 = rhs(Vector(state + dt * k3));
  detail::check_finite(k4, 4);

  Vector next = state + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
  for (Eigen::Index i : angles) next(i) = wrap_angle(next(i));
  return next;
}

}  // namespace opinion_nav
