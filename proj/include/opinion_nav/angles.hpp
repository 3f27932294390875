#pragma once

#include <cmath>
#include <numbers>

namespace opinion_nav {

template <typename Scalar>
inline constexpr Scalar kPi = std::numbers::pi_v<Scalar>;

/// Wraps an angle into (-pi, pi].
template <typename Scalar>
Scalar wrap_angle(Scalar angle) {
  Scalar wrapped = std::remainder(angle, Scalar(2) * kPi<Scalar>);
  if (wrapped <= -kPi<Scalar>) wrapped += Scalar(2) * kPi<Scalar>;
  return wrapped;
}

}  // namespace opinion_nav
