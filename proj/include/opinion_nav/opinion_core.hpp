#pragma once

// Right-hand sides of the opinion, attention and heading dynamics. Everything
// here is a pure function of its arguments and templated on the scalar type.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "opinion_nav/angles.hpp"

namespace opinion_nav {

/// Quasi-static attention: u = u_lo + (u_hi - u_lo) (R k)^n / ((R k)^n + chi^n).
template <typename Scalar>
struct HillAttention {
  Scalar u_lo = 0;
  Scalar u_hi = Scalar(1.5);
  Scalar R = 7;
  Scalar n = 7;
};

/// Attention integrated as a state: tau_u du/dt = -m u + exp(c (R - chi) k).
template <typename Scalar>
struct OdeAttention {
  Scalar tau_u = 1;
  Scalar m = 1;
  Scalar c = 1;
  Scalar R = 11;
};

template <typename Scalar>
using AttentionLawT = std::variant<HillAttention<Scalar>, OdeAttention<Scalar>>;

template <typename Scalar>
struct OpinionParamsT {
  Scalar d = Scalar(0.5);
  Scalar alpha = Scalar(0.1);
  Scalar gamma = 3;
  Scalar b = 0;
  Scalar beta = kPi<Scalar> / 4;
  Scalar k = 1;
  // |eta_h| is clamped to this before taking tan() for the proxy opinion.
  Scalar proxy_cap = Scalar(1.4);
  AttentionLawT<Scalar> attention = OdeAttention<Scalar>{};

  /// Human-readable invariant violations; empty when the parameters are valid.
  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    if (!(d > 0)) out.emplace_back("d must be > 0");
    if (!(alpha > 0)) out.emplace_back("alpha must be > 0");
    if (!(k > 0)) out.emplace_back("k must be > 0");
    if (!(beta > 0 && beta <= kPi<Scalar> / 2)) out.emplace_back("beta must lie in (0, pi/2]");
    if (!(proxy_cap > 0 && proxy_cap < kPi<Scalar> / 2)) out.emplace_back("proxy_cap must lie in (0, pi/2)");
    if (!std::isfinite(gamma)) out.emplace_back("gamma must be finite");
    if (!std::isfinite(b)) out.emplace_back("b must be finite");
    if (const auto* hill = std::get_if<HillAttention<Scalar>>(&attention)) {
      if (!(hill->u_lo >= 0)) out.emplace_back("attention.u_lo must be >= 0");
      if (!(hill->u_hi > hill->u_lo)) out.emplace_back("attention.u_hi must exceed u_lo");
      if (!(hill->R > 0)) out.emplace_back("attention.R must be > 0");
      if (!(hill->n > 0)) out.emplace_back("attention.n must be > 0");
    } else {
      const auto& ode = std::get<OdeAttention<Scalar>>(attention);
      if (!(ode.tau_u > 0)) out.emplace_back("attention.tau_u must be > 0");
      if (!(ode.m > 0)) out.emplace_back("attention.m must be > 0");
      if (!(ode.c > 0)) out.emplace_back("attention.c must be > 0");
      if (!(ode.R > 0)) out.emplace_back("attention.R must be > 0");
    }
    return out;
  }

  bool uses_hill() const { return std::holds_alternative<HillAttention<Scalar>>(attention); }
};

template <typename Scalar>
struct OpinionStateT {
  Scalar z = 0;  // > 0 prefers passing left
  Scalar u = 0;
};

/// Relative geometry between an observer and one other mover. For the robot
/// looking at a human, eta_h is the human's heading measured from the
/// human->robot line and eta_r is the human's bearing from the robot heading.
template <typename Scalar>
struct ObservationT {
  Scalar chi = 0;
  Scalar eta_h = 0;
  Scalar eta_r = 0;
  Scalar phi_r = 0;
  Scalar kappa = 1;
};

template <typename Scalar>
struct Pose2 {
  Eigen::Matrix<Scalar, 2, 1> position = Eigen::Matrix<Scalar, 2, 1>::Zero();
  Scalar heading = 0;
};

class DegenerateGeometry : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
struct GeneralNetworkParamsT {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Matrix adjacency;  // a_ik in {0, 1}, zero diagonal
  Vector d, u, alpha, gamma, b;

  Eigen::Index n_agents() const { return adjacency.rows(); }
};

using OpinionParams = OpinionParamsT<double>;
using OpinionState = OpinionStateT<double>;
using Observation = ObservationT<double>;
using GeneralNetworkParams = GeneralNetworkParamsT<double>;
using AttentionLaw = AttentionLawT<double>;
using HillAttentionLaw = HillAttention<double>;
using OdeAttentionLaw = OdeAttention<double>;
using Pose = Pose2<double>;

/// dz_i/dt = -d_i z_i + u_i tanh(alpha_i z_i + gamma_i sum_k a_ik z_k + b_i).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> general_opinion_rhs(
    const Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>& z,
    const GeneralNetworkParamsT<Scalar>& params) {
  const Eigen::Index n = params.n_agents();
  if (params.adjacency.cols() != n || z.size() != n || params.d.size() != n || params.u.size() != n ||
      params.alpha.size() != n || params.gamma.size() != n || params.b.size() != n) {
    throw std::invalid_argument("general_opinion_rhs: dimension mismatch");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (params.adjacency(i, i) != Scalar(0)) {
      throw std::invalid_argument("general_opinion_rhs: adjacency diagonal must be zero");
    }
  }
  const auto social = (params.adjacency * z).eval();
  return (-params.d.cwiseProduct(z) +
          params.u.cwiseProduct((params.alpha.cwiseProduct(z) + params.gamma.cwiseProduct(social) + params.b)
                                    .array()
                                    .tanh()
                                    .matrix()))
      .eval();
}

/// tan of the clamped heading angle; finite for every input.
template <typename Scalar>
Scalar proxy_opinion(Scalar eta_h, Scalar eta_cap = Scalar(1.4)) {
  return std::tan(std::clamp(eta_h, -eta_cap, eta_cap));
}

template <typename Scalar>
Scalar robot_opinion_rhs(const OpinionStateT<Scalar>& state, Scalar proxy, const OpinionParamsT<Scalar>& params) {
  return -params.d * state.z + state.u * std::tanh(params.alpha * state.z + params.gamma * proxy + params.b);
}

/// Returns u_lo when the mover is not approaching (kappa <= 0).
template <typename Scalar>
Scalar attention_hill(Scalar kappa, Scalar chi, const HillAttention<Scalar>& law) {
  if (kappa <= 0) return law.u_lo;
  const Scalar reach = std::pow(law.R * kappa, law.n);
  const Scalar dist = std::pow(chi, law.n);
  return law.u_lo + (law.u_hi - law.u_lo) * (reach / (reach + dist));
}

template <typename Scalar>
Scalar attention_ode_rhs(Scalar u, Scalar kappa_att, Scalar chi, const OdeAttention<Scalar>& law) {
  return (-law.m * u + std::exp(law.c * (law.R - chi) * kappa_att)) / law.tau_u;
}

template <typename Scalar>
Scalar heading_rhs(Scalar z, Scalar phi_r, const OpinionParamsT<Scalar>& params) {
  return params.k * std::sin(params.beta * std::tanh(z) + phi_r);
}

/// Geometry of `other` as seen from `self`, which is heading for `goal`.
/// Throws DegenerateGeometry when the two positions coincide.
template <typename Scalar>
ObservationT<Scalar> relative_geometry(const Pose2<Scalar>& self, const Pose2<Scalar>& other,
                                       const Eigen::Matrix<Scalar, 2, 1>& goal) {
  const Eigen::Matrix<Scalar, 2, 1> to_other = other.position - self.position;
  const Scalar chi = to_other.norm();
  if (!(chi > 0)) throw DegenerateGeometry("relative_geometry: coincident positions");
  const Scalar line_to_self = std::atan2(-to_other.y(), -to_other.x());
  const Eigen::Matrix<Scalar, 2, 1> to_goal = goal - self.position;

  ObservationT<Scalar> obs;
  obs.chi = chi;
  obs.eta_r = wrap_angle(std::atan2(to_other.y(), to_other.x()) - self.heading);
  obs.eta_h = wrap_angle(other.heading - line_to_self);
  obs.phi_r = wrap_angle(std::atan2(to_goal.y(), to_goal.x()) - self.heading);
  obs.kappa = std::cos(obs.eta_h);
  return obs;
}

}  // namespace opinion_nav
