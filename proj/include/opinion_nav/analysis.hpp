#pragma once

// Equilibria, stability and bifurcation helpers for the single-agent opinion
// equation dz/dt = -d z + u tanh(alpha z + c) and the linearized head-on pair.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <stdexcept>
#include <tuple>
#include <vector>

#include <Eigen/Core>

namespace opinion_nav {

template <typename Scalar>
struct EquilibriumPoint {
  Scalar z = 0;
  bool stable = false;
  Scalar u = 0;
  Scalar c = 0;
  // Tangency (double root): the point sits on a fold and stability is marginal.
  bool degenerate = false;
};

template <typename Scalar>
struct PitchforkBranch {
  std::vector<EquilibriumPoint<Scalar>> points;  // increasing u
};

template <typename Scalar>
struct PitchforkDiagram {
  Scalar d = 0;
  Scalar alpha = 0;
  Scalar c = 0;
  std::vector<Scalar> u_samples;
  std::vector<PitchforkBranch<Scalar>> branches;
  std::optional<Scalar> u_star;

  bool unfolded() const { return c != Scalar(0); }
};

enum class Preference { Left, Right, Neutral };

template <typename Scalar>
Scalar critical_attention(Scalar d, Scalar alpha) {
  if (!(d > 0) || !(alpha > 0)) throw std::invalid_argument("critical_attention: d and alpha must be > 0");
  return d / alpha;
}

template <typename Scalar>
Scalar linearization_eigenvalue(Scalar d, Scalar alpha, Scalar u) {
  return -d + alpha * u;
}

template <typename Scalar>
Scalar opinion_field(Scalar z, Scalar d, Scalar alpha, Scalar u, Scalar c) {
  return -d * z + u * std::tanh(alpha * z + c);
}

template <typename Scalar>
Scalar opinion_field_slope(Scalar z, Scalar d, Scalar alpha, Scalar u, Scalar c) {
  const Scalar sech = Scalar(1) / std::cosh(alpha * z + c);
  return -d + u * alpha * sech * sech;
}

/// All real roots of -d z + u tanh(alpha z + c). The field is monotone between
/// its (at most two) critical points, so each monotone piece holds at most one
/// root; roots are bisected until the bracket stops shrinking.
template <typename Scalar>
std::vector<EquilibriumPoint<Scalar>> equilibria_1d(Scalar d, Scalar alpha, Scalar u, Scalar c) {
  if (!(d > 0) || !(alpha > 0)) throw std::invalid_argument("equilibria_1d: d and alpha must be > 0");
  if (!(u >= 0)) throw std::invalid_argument("equilibria_1d: u must be >= 0");
  auto f = [&](Scalar z) { return opinion_field(z, d, alpha, u, c); };

  const Scalar bound = (u + std::abs(c) + 1) / d;
  std::vector<Scalar> knots{-bound};
  std::vector<bool> critical{false};
  const Scalar ratio = u * alpha / d;
  if (ratio >= 1) {
    const Scalar w = std::acosh(std::sqrt(ratio));
    for (Scalar z : {(-w - c) / alpha, (w - c) / alpha}) {
      if (z > knots.back() && z < bound) {
        knots.push_back(z);
        critical.push_back(true);
      }
    }
  }
  knots.push_back(bound);
  critical.push_back(false);

  const Scalar tangency_tol = Scalar(64) * std::numeric_limits<Scalar>::epsilon() * (u + d * bound + 1);
  std::vector<EquilibriumPoint<Scalar>> out;
  auto emit = [&](Scalar z, bool degenerate) {
    EquilibriumPoint<Scalar> p;
    p.z = z;
    p.u = u;
    p.c = c;
    p.degenerate = degenerate;
    p.stable = !degenerate && opinion_field_slope(z, d, alpha, u, c) < 0;
    out.push_back(p);
  };

  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    Scalar lo = knots[i], hi = knots[i + 1];
    if (i > 0 && std::abs(f(lo)) <= tangency_tol) {
      if (out.empty() || out.back().z != lo) emit(lo, critical[i]);
      continue;
    }
    if (std::abs(f(hi)) <= tangency_tol) continue;  // handled as the next segment's left knot
    Scalar flo = f(lo);
    if ((flo < 0) == (f(hi) < 0)) continue;
    while (true) {
      const Scalar mid = lo + (hi - lo) / 2;
      if (!(mid > lo && mid < hi)) break;
      const Scalar fm = f(mid);
      if (fm == 0) {
        lo = hi = mid;
        break;
      }
      if ((fm < 0) == (flo < 0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    emit(std::abs(f(lo)) <= std::abs(f(hi)) ? lo : hi, false);
  }
  return out;
}

/// Equilibria on every sample, joined into branches by nearest-neighbour
/// continuation. u_star is the first sample whose root count jumps from 1 to 3.
template <typename Scalar>
PitchforkDiagram<Scalar> pitchfork_diagram(Scalar d, Scalar alpha, const std::vector<Scalar>& u_samples, Scalar c) {
  if (u_samples.size() < 50) throw std::invalid_argument("pitchfork_diagram: need at least 50 samples");
  for (std::size_t i = 1; i < u_samples.size(); ++i) {
    if (!(u_samples[i] > u_samples[i - 1])) throw std::invalid_argument("pitchfork_diagram: u samples must increase");
  }
  PitchforkDiagram<Scalar> diagram;
  diagram.d = d;
  diagram.alpha = alpha;
  diagram.c = c;
  diagram.u_samples = u_samples;

  std::vector<std::size_t> live;  // branch indices touched at the previous sample
  std::size_t previous_count = 0;
  for (std::size_t s = 0; s < u_samples.size(); ++s) {
    std::vector<EquilibriumPoint<Scalar>> roots;
    bool tangency = false;
    for (const auto& p : equilibria_1d(d, alpha, u_samples[s], c)) {
      tangency = tangency || p.degenerate;
      roots.push_back(p);
    }
    // A sample that lands exactly on a fold does not count.
    if (!tangency) {
      if (previous_count == 1 && roots.size() == 3 && !diagram.u_star) diagram.u_star = u_samples[s];
      previous_count = roots.size();
    }

    // Closest (root, branch) pairs are joined first.
    std::vector<std::tuple<Scalar, std::size_t, std::size_t>> pairs;
    for (std::size_t r = 0; r < roots.size(); ++r) {
      for (std::size_t i = 0; i < live.size(); ++i) {
        pairs.emplace_back(std::abs(diagram.branches[live[i]].points.back().z - roots[r].z), r, i);
      }
    }
    std::sort(pairs.begin(), pairs.end());
    std::vector<std::optional<std::size_t>> owner(roots.size());
    std::vector<bool> claimed(live.size(), false);
    for (const auto& [gap, r, i] : pairs) {
      if (owner[r] || claimed[i]) continue;
      owner[r] = live[i];
      claimed[i] = true;
    }
    std::vector<std::size_t> next_live;
    for (std::size_t r = 0; r < roots.size(); ++r) {
      if (!owner[r]) {
        diagram.branches.push_back(PitchforkBranch<Scalar>{});
        owner[r] = diagram.branches.size() - 1;
      }
      diagram.branches[*owner[r]].points.push_back(roots[r]);
      next_live.push_back(*owner[r]);
    }
    live = std::move(next_live);
  }
  return diagram;
}

template <typename Scalar>
std::vector<Scalar> linspace(Scalar lo, Scalar hi, std::size_t n) {
  std::vector<Scalar> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<Scalar>(i) / static_cast<Scalar>(n - 1);
  }
  return out;
}

template <typename Scalar>
Preference preference_direction(Scalar gamma, Scalar eta_h, Scalar b) {
  const Scalar drive = gamma * std::tan(eta_h) + b;
  if (drive > 0) return Preference::Left;
  if (drive < 0) return Preference::Right;
  return Preference::Neutral;
}

template <typename Scalar>
Scalar coupled_critical_attention(Scalar d, Scalar alpha, Scalar gamma, Scalar beta) {
  const Scalar denom = alpha + std::abs(gamma) * beta;
  if (!(denom > 0)) throw std::invalid_argument("coupled_critical_attention: alpha + |gamma| beta must be > 0");
  return d / denom;
}

/// (A - k +/- sqrt((A + k)^2 +/- 4 gamma beta k u)) / 2 with A = -d + alpha u,
/// over all four sign combinations.
template <typename Scalar>
std::array<std::complex<Scalar>, 4> coupled_eigenvalues(Scalar d, Scalar alpha, Scalar gamma, Scalar beta, Scalar k,
                                                        Scalar u) {
  const Scalar a = -d + alpha * u;
  const Scalar coupling = 4 * gamma * beta * k * u;
  std::array<std::complex<Scalar>, 4> out;
  std::size_t i = 0;
  for (Scalar inner : {Scalar(1), Scalar(-1)}) {
    const std::complex<Scalar> root = std::sqrt(std::complex<Scalar>((a + k) * (a + k) + inner * coupling));
    for (Scalar outer : {Scalar(1), Scalar(-1)}) out[i++] = (std::complex<Scalar>(a - k) + outer * root) / Scalar(2);
  }
  return out;
}

/// Small-angle linearization of the symmetric head-on pair about deadlock,
/// state (z_r, z_h, eta_r, eta_h) with each eta measured from the line to the
/// other mover.
template <typename Scalar>
Eigen::Matrix<Scalar, 4, 4> head_on_jacobian(Scalar d, Scalar alpha, Scalar gamma, Scalar beta, Scalar k, Scalar u) {
  const Scalar a = -d + alpha * u;
  Eigen::Matrix<Scalar, 4, 4> j;
  // clang-format off
  j << a,        0,        0,  gamma * u,
       0,        a,        gamma * u, 0,
       k * beta, 0,        -k, 0,
       0,        k * beta, 0,  -k;
  // clang-format on
  return j;
}

}  // namespace opinion_nav
