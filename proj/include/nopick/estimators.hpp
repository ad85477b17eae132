#pragma once

// Closed-form identification from micrograph moments: the density gamma with
// known noise, (gamma, sigma^2) jointly from two quadratics in beta = gamma/L,
// the signal itself from a3[k, L-1] / a2[L-1], and L from the support of a2.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "nopick/core.hpp"
#include "nopick/moments.hpp"

namespace nopick {

struct GammaEstimate {
  double gamma = 0.0;
  std::vector<std::string> warnings;
};

/// gamma = L a1^2 / (a2[0] + 2 sum_{l>=1} a2[l] - sigma^2). Requires a
/// signal with nonzero mean.
inline GammaEstimate estimate_gamma_known_sigma(const MomentSet& m, double sigma) {
  require(m.L >= 1 && m.a2.size() == m.L, "estimate_gamma_known_sigma: malformed moments");
  double den = m.a2[0] - sigma * sigma;
  double scale = std::abs(m.a2[0]) + sigma * sigma;
  for (std::size_t l = 1; l < m.L; ++l) {
    den += 2.0 * m.a2[l];
    scale += 2.0 * std::abs(m.a2[l]);
  }
  const double num = double(m.L) * m.a1 * m.a1;
  GammaEstimate out;
  if (std::abs(m.a1) <= 1e-12 * std::sqrt(scale)) {
    out.warnings.push_back("mean of the data is zero: the signal mean must be nonzero to identify gamma");
    return out;
  }
  if (!(std::abs(den) > 1e-12 * scale))
    throw DegenerateInput(
        "estimate_gamma_known_sigma: vanishing denominator (zero-mean signal or wrong sigma)");
  out.gamma = num / den;
  return out;
}

// ---------------------------------------------------------------------------

struct Observables {
  double E1 = 0, E2 = 0, E3 = 0, E4 = 0, E5 = 0;
  double a1 = 0;
  std::size_t L = 0;
};

namespace detail {
// No L check: the algebra also holds for L = 2, which the public entry point
// excludes.
inline Observables observables_from(const MomentSet& m) {
  const std::size_t L = m.L;
  Observables o;
  o.L = L;
  o.a1 = m.a1;
  o.E1 = m.a1 * m.a2[0];
  double diag_edge = 0.0;  // sum_{j>=1} a3[j,j] + a3[0,j]
  for (std::size_t j = 1; j < L; ++j) diag_edge += m.at3(j, j) + m.at3(0, j);
  double inner = 0.0;  // sum_{1<=i<j<=L-1} a3[i,j]
  for (std::size_t j = 2; j < L; ++j)
    for (std::size_t i = 1; i < j; ++i) inner += m.at3(i, j);
  o.E2 = m.at3(0, 0) + diag_edge;
  o.E3 = m.a2[0];
  for (std::size_t j = 1; j < L; ++j) o.E3 += 2.0 * m.a2[j];
  o.E4 = m.a1 * m.a1 * m.a1 / double(L);
  o.E5 = m.at3(0, 0) + 3.0 * diag_edge + 6.0 * inner;
  return o;
}
}  // namespace detail

inline Observables compute_observables(const MomentSet& m) {
  if (m.L < 3) throw InvalidArgument("compute_observables: L must be at least 3");
  return detail::observables_from(m);
}

/// A b^2 + B b + C = 0 and D b^2 + E b + F = 0, both satisfied by b = gamma/L.
struct QuadraticPair {
  double A = 0, B = 0, C = 0, D = 0, E = 0, F = 0;
};

inline QuadraticPair quadratic_pair(const Observables& o) {
  require(o.a1 != 0.0, "quadratic_pair: the data mean must be nonzero");
  const double L = double(o.L);
  const double a = o.a1;
  const double a3 = a * a * a;
  QuadraticPair q;
  q.A = o.E2 - (2 * L + 1) * a * o.E3;
  q.B = -o.E1 + (2 * L + 1) * a3 + a * o.E3;
  q.C = -a3;
  q.D = o.E3 - o.E5 / (a * (6 * L - 3));
  q.E = -a * a;
  q.F = L * o.E4 / (a * (6 * L - 3));
  return q;
}

/// Real roots of a x^2 + b x + c, using the cancellation-free form. Nearly
/// linear equations (|a| < 1e-12 max(|b|,|c|)) are solved as linear; a
/// slightly negative discriminant (noise) is read as a double root.
inline std::vector<double> real_roots(double a, double b, double c) {
  const double big = std::max(std::abs(b), std::abs(c));
  if (std::abs(a) < 1e-12 * big || a == 0.0) {
    if (b == 0.0) return {};
    return {-c / b};
  }
  double disc = b * b - 4 * a * c;
  const double disc_scale = b * b + 4 * std::abs(a * c);
  if (disc < 0) {
    if (disc < -1e-10 * disc_scale) return {};
    disc = 0;
  }
  const double sq = std::sqrt(disc);
  const double q = -0.5 * (b + std::copysign(sq, b));
  if (q == 0.0) return {0.0};
  return {q / a, c / q};
}

struct DensityNoiseEstimate {
  double gamma = 0.0;
  double sigma2 = 0.0;
  double residual = 0.0;  // sum of squared relative residuals of both quadratics
  bool clamped = false;   // sigma2 was negative and clamped to 0
  std::vector<std::string> warnings;
};

/// sigma^2 = E3 - a1^2 / beta.
inline double sigma2_from_beta(const Observables& o, double beta) {
  require(beta > 0.0, "sigma2_from_beta: beta must be positive");
  return o.E3 - o.a1 * o.a1 / beta;
}

namespace detail {
inline double relative_residual(double a, double b, double c, double x) {
  const double den = std::abs(a) * x * x + std::abs(b) * std::abs(x) + std::abs(c);
  return den == 0.0 ? 0.0 : (a * x * x + b * x + c) / den;
}
}  // namespace detail

/// Sine of the angle between the two coefficient vectors after rescaling
/// beta to the admissible range; 0 when the quadratics are proportional.
inline double quadratic_independence(const QuadraticPair& q, std::size_t L) {
  const double s = 1.0 / double(2 * L - 1);
  std::array<double, 3> u{q.A * s * s, q.B * s, q.C};
  std::array<double, 3> v{q.D * s * s, q.E * s, q.F};
  auto norm = [](const std::array<double, 3>& w) {
    return std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
  };
  const double nu = norm(u), nv = norm(v);
  if (nu == 0.0 || nv == 0.0) return 0.0;
  for (auto& w : u) w /= nu;
  for (auto& w : v) w /= nv;
  const std::array<double, 3> x{u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2],
                                u[0] * v[1] - u[1] * v[0]};
  return norm(x);
}

/// Picks the admissible root beta in (0, 1/(2L-1)] that best satisfies both
/// quadratics, then back-substitutes sigma^2.
inline DensityNoiseEstimate solve_gamma_sigma(const Observables& o, double admissible_slack = 1e-6,
                                              double dependence_tol = 1e-7) {
  if (o.a1 == 0.0) throw DegenerateInput("solve_gamma_sigma: the data mean is zero");
  require(o.L >= 2, "solve_gamma_sigma: L must be at least 2");
  const QuadraticPair q = quadratic_pair(o);
  const double beta_max = 1.0 / double(2 * o.L - 1);

  DensityNoiseEstimate out;
  if (quadratic_independence(q, o.L) < dependence_tol)
    out.warnings.push_back("quadratics are (nearly) dependent; gamma may not be identifiable");

  std::vector<double> candidates = real_roots(q.A, q.B, q.C);
  const auto more = real_roots(q.D, q.E, q.F);
  candidates.insert(candidates.end(), more.begin(), more.end());

  double best = std::numeric_limits<double>::quiet_NaN();
  double best_res = std::numeric_limits<double>::infinity();
  for (double b : candidates) {
    if (!(b > 0.0) || b > beta_max * (1.0 + admissible_slack)) continue;
    b = std::min(b, beta_max);
    const double r1 = detail::relative_residual(q.A, q.B, q.C, b);
    const double r2 = detail::relative_residual(q.D, q.E, q.F, b);
    const double res = r1 * r1 + r2 * r2;
    if (res < best_res) {
      best_res = res;
      best = b;
    }
  }
  if (std::isnan(best))
    throw DegenerateInput("solve_gamma_sigma: no real root in the admissible interval (0, 1/(2L-1)]");

  out.gamma = double(o.L) * best;
  out.residual = best_res;
  out.sigma2 = sigma2_from_beta(o, best);
  if (out.sigma2 < 0.0) {
    out.sigma2 = 0.0;
    out.clamped = true;
    out.warnings.push_back("negative sigma^2 clamped to 0");
  }
  return out;
}

inline DensityNoiseEstimate solve_gamma_sigma(const MomentSet& m) {
  return solve_gamma_sigma(compute_observables(m));
}

// ---------------------------------------------------------------------------

/// x[k] = a_x3[k, L-1] / a_x2[L-1] on the debiased signal moments.
inline Signal1D recover_closed_form(const MomentSet& m, double gamma, double sigma,
                                    double rel_tol = 1e-6) {
  require(m.L >= 1, "recover_closed_form: empty moments");
  const MomentSet x = debias(m, gamma, sigma);
  const std::size_t L = m.L;
  double scale = 0.0;
  for (double v : x.a2) scale = std::max(scale, std::abs(v));
  const double den = x.a2[L - 1];
  if (!(std::abs(den) >= rel_tol * scale) || den == 0.0)
    throw DegenerateInput(
        "recover_closed_form: a2[L-1] is near zero (first or last signal sample vanishes)");
  std::vector<double> out(L);
  for (std::size_t k = 0; k < L; ++k) out[k] = x.at3(k, L - 1) / den;
  return Signal1D(std::move(out));
}

struct LengthEstimate {
  std::size_t L = 0;
  std::vector<std::string> warnings;
};

/// 1 + the largest shift l >= 1 with |a2[l]| > tol * max_{l>=1} |a2[l]|.
inline LengthEstimate estimate_signal_length(const MomentSet& m, double tol = 1e-3) {
  LengthEstimate out{m.L, {}};
  double peak = 0.0;
  for (std::size_t l = 1; l < m.L; ++l) peak = std::max(peak, std::abs(m.a2[l]));
  if (peak > 0.0) {
    for (std::size_t l = m.L; l-- > 1;)
      if (std::abs(m.a2[l]) > tol * peak) {
        out.L = l + 1;
        return out;
      }
  }
  if (m.L == 1) {
    out.L = 1;
    return out;
  }
  out.warnings.push_back("no a2 entry above threshold; falling back to the probe window length");
  return out;
}

}  // namespace nopick
