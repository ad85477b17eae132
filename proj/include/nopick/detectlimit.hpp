#pragma once

// Optimal single-interval detector for "signal x present" (eta = 0, prior q)
// against "noise only" (eta = 1), X ~ N(theta_eta, sigma^2 I), and its
// failure probability, analytic and by Monte Carlo.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <thread>
#include <vector>

#include "nopick/core.hpp"

namespace nopick {

struct DetectionProblem {
  std::vector<double> theta0;  // the signal; theta1 is the zero vector
  double q = 0.5;              // P[eta = 0]
  double sigma = 1.0;

  std::size_t L() const { return theta0.size(); }
  double log_b() const { return std::log((1.0 - q) / q); }
  double separation() const {  // |theta1 - theta0|
    return std::sqrt(std::inner_product(theta0.begin(), theta0.end(), theta0.begin(), 0.0));
  }

  void validate() const {
    require(!theta0.empty(), "DetectionProblem: L must be at least 1");
    require(q > 0.0 && q < 1.0, "DetectionProblem: q must lie in (0, 1)");
    require(sigma > 0.0, "DetectionProblem: sigma must be positive");
  }
};

/// Upper tail of the standard normal.
inline double normal_upper_tail(double t) { return 0.5 * std::erfc(t / std::sqrt(2.0)); }

/// Declares 1 (noise only) iff <X, theta1 - theta0> >= (|theta1|^2 - |theta0|^2)/2
/// - sigma^2 log b + offset; ties declare 1. `offset` shifts the boundary and
/// is zero for the optimal rule.
inline int optimal_decision(std::span<const double> X, const DetectionProblem& p, double offset = 0.0) {
  require(X.size() == p.L(), "optimal_decision: dimension mismatch");
  double lhs = 0.0, n0 = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    lhs -= X[i] * p.theta0[i];
    n0 += p.theta0[i] * p.theta0[i];
  }
  const double rhs = -0.5 * n0 - p.sigma * p.sigma * p.log_b() + offset;
  return lhs >= rhs ? 1 : 0;
}

/// q P[Y >= c/sigma - sigma log b] + (1-q) P[Y >= c/sigma + sigma log b] with
/// c = |Delta|^2/2 and Y ~ N(0, |Delta|^2).
inline double analytic_failure_prob(const DetectionProblem& p) {
  p.validate();
  const double d = p.separation();
  if (!(d > 0.0)) throw DegenerateInput("analytic_failure_prob: theta0 equals theta1");
  const double c = 0.5 * d * d;
  const double lb = p.log_b();
  const double t0 = (c / p.sigma - p.sigma * lb) / d;
  const double t1 = (c / p.sigma + p.sigma * lb) / d;
  return p.q * normal_upper_tail(t0) + (1.0 - p.q) * normal_upper_tail(t1);
}

inline double analytic_success_prob(const DetectionProblem& p) { return 1.0 - analytic_failure_prob(p); }

struct MonteCarloResult {
  double rate = 0.0;
  double stderr_ = 0.0;
  std::size_t trials = 0;
};

namespace detail {
constexpr std::size_t kShardTrials = 1 << 14;

// Success count over one shard. `constant` >= 0 replaces the detector with a
// constant guess.
inline std::size_t run_shard(const DetectionProblem& p, std::size_t trials, std::uint64_t seed,
                             double offset, int constant) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution signal_absent(1.0 - p.q);
  std::normal_distribution<double> normal(0.0, p.sigma);
  std::vector<double> X(p.L());
  std::size_t ok = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const int eta = signal_absent(rng) ? 1 : 0;
    for (std::size_t i = 0; i < X.size(); ++i) X[i] = (eta == 0 ? p.theta0[i] : 0.0) + normal(rng);
    const int guess = constant >= 0 ? constant : optimal_decision(X, p, offset);
    ok += (guess == eta);
  }
  return ok;
}
}  // namespace detail

/// Empirical success rate of the optimal detector (or of a shifted boundary /
/// constant guess). Trials are split into fixed-size shards with derived
/// seeds, so the result does not depend on `threads`.
inline MonteCarloResult monte_carlo_success(const DetectionProblem& p, std::size_t trials,
                                            std::uint64_t seed, unsigned threads = 1,
                                            double offset = 0.0, int constant = -1) {
  p.validate();
  require(trials >= 1, "monte_carlo_success: trials must be at least 1");
  const std::size_t shards = (trials + detail::kShardTrials - 1) / detail::kShardTrials;
  std::vector<std::size_t> ok(shards, 0);
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t s = first; s < shards; s += stride) {
      const std::size_t n = std::min(detail::kShardTrials, trials - s * detail::kShardTrials);
      ok[s] = detail::run_shard(p, n, derive_seed(seed, s), offset, constant);
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, unsigned(shards)));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
  }
  const std::size_t total = std::accumulate(ok.begin(), ok.end(), std::size_t{0});
  MonteCarloResult out;
  out.trials = trials;
  out.rate = double(total) / double(trials);
  out.stderr_ = std::sqrt(out.rate * (1.0 - out.rate) / double(trials));
  return out;
}

/// Guessing the more likely hypothesis without looking at X.
inline int constant_guess(const DetectionProblem& p) { return p.q >= 0.5 ? 0 : 1; }

struct SweepRow {
  double sigma = 0.0;
  double analytic_success = 0.0;
  double mc_success = 0.0;
  double mc_stderr = 0.0;
  std::size_t trials = 0;
};

inline std::vector<SweepRow> sweep_sigma(const DetectionProblem& tmpl, std::span<const double> sigmas,
                                         std::size_t trials, std::uint64_t seed, unsigned threads = 1) {
  require(!sigmas.empty(), "sweep_sigma: empty sigma list");
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    require(sigmas[i] > 0.0, "sweep_sigma: sigmas must be positive");
    require(i == 0 || sigmas[i] > sigmas[i - 1], "sweep_sigma: sigmas must be ascending");
  }
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    DetectionProblem p = tmpl;
    p.sigma = sigmas[i];
    const auto mc = monte_carlo_success(p, trials, derive_seed(seed, i), threads);
    rows.push_back({p.sigma, analytic_success_prob(p), mc.rate, mc.stderr_, trials});
  }
  return rows;
}

}  // namespace nopick
