#pragma once

// Synthetic micrographs: separated occurrences of a known signal plus white
// Gaussian noise.

#include <array>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "nopick/core.hpp"

namespace nopick {

/// Occurrence start indices in a 1-D micrograph. Any two starts differ by at
/// least `gap` (2L-1 unless overridden).
struct PlacementPlan1D {
  std::size_t N = 0;
  std::size_t L = 0;
  std::size_t gap = 0;
  std::vector<std::size_t> starts;  // sorted
  std::size_t proposals = 0;        // proposals drawn while building the plan

  std::size_t M() const { return starts.size(); }
  double density() const { return N == 0 ? 0.0 : double(M()) * double(L) / double(N); }
};

/// Upper-left corners of L x L occurrences in an N x N micrograph. Two
/// corners conflict when they are closer than `gap` along both axes.
struct PlacementPlan2D {
  std::size_t N = 0;
  std::size_t L = 0;
  std::size_t gap = 0;
  std::vector<std::array<std::size_t, 2>> starts;  // sorted (row, col)
  std::size_t proposals = 0;

  std::size_t M() const { return starts.size(); }
  double density() const {
    return N == 0 ? 0.0 : double(M()) * double(L * L) / double(N * N);
  }
};

/// Observed data y, 1-D (extents = {N}) or 2-D (extents = {N, N}, row-major).
struct Micrograph {
  std::vector<std::size_t> extents;
  std::vector<double> data;
  std::optional<double> sigma_true;

  std::size_t ndims() const { return extents.size(); }
  std::size_t pixel_count() const { return data.size(); }
};

inline std::size_t default_gap(std::size_t L) { return 2 * L - 1; }

inline bool separated_1d(std::size_t a, std::size_t b, std::size_t gap) {
  return (a > b ? a - b : b - a) >= gap;
}

inline bool separated_2d(const std::array<std::size_t, 2>& a, const std::array<std::size_t, 2>& b,
                         std::size_t gap) {
  return separated_1d(a[0], b[0], gap) || separated_1d(a[1], b[1], gap);
}

/// Random sequential placement: proposals are uniform over [0, N-L] and a
/// proposal is kept only if it respects the gap to every accepted start.
/// Stops at target_M accepted starts or after max_attempts proposals
/// (0 means 50 * target_M).
inline PlacementPlan1D place_occurrences(std::size_t N, std::size_t L, std::size_t target_M,
                                         std::size_t max_attempts, std::uint64_t seed,
                                         std::size_t gap = 0) {
  require(L >= 1, "place_occurrences: L must be at least 1");
  require(N >= 2 * L - 1, "place_occurrences: N must be at least 2L-1");
  if (gap == 0) gap = default_gap(L);
  if (max_attempts == 0) max_attempts = 50 * target_M;

  PlacementPlan1D plan{N, L, gap, {}, 0};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, N - L);
  std::set<std::size_t> accepted;

  while (accepted.size() < target_M && plan.proposals < max_attempts) {
    ++plan.proposals;
    const std::size_t p = pick(rng);
    auto next = accepted.lower_bound(p);
    if (next != accepted.end() && *next - p < gap) continue;
    if (next != accepted.begin() && p - *std::prev(next) < gap) continue;
    accepted.insert(next, p);
  }
  plan.starts.assign(accepted.begin(), accepted.end());
  return plan;
}

/// 2-D analogue of place_occurrences on upper-left corners in [0, N-L]^2.
inline PlacementPlan2D place_occurrences_2d(std::size_t N, std::size_t L, std::size_t target_M,
                                            std::size_t max_attempts, std::uint64_t seed,
                                            std::size_t gap = 0) {
  require(L >= 1, "place_occurrences_2d: L must be at least 1");
  require(N >= 2 * L - 1, "place_occurrences_2d: N must be at least 2L-1");
  if (gap == 0) gap = default_gap(L);
  if (max_attempts == 0) max_attempts = 50 * target_M;

  PlacementPlan2D plan{N, L, gap, {}, 0};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, N - L);

  // Bucket corners into gap-sized cells; a conflicting corner lies in one of
  // the 3x3 neighbouring cells.
  const std::size_t cells = (N - L) / gap + 1;
  std::vector<std::vector<std::array<std::size_t, 2>>> bucket(cells * cells);

  std::vector<std::array<std::size_t, 2>> accepted;
  while (accepted.size() < target_M && plan.proposals < max_attempts) {
    ++plan.proposals;
    const std::array<std::size_t, 2> p{pick(rng), pick(rng)};
    const std::size_t cr = p[0] / gap;
    const std::size_t cc = p[1] / gap;
    bool ok = true;
    for (std::size_t r = (cr == 0 ? 0 : cr - 1); ok && r <= std::min(cells - 1, cr + 1); ++r) {
      for (std::size_t c = (cc == 0 ? 0 : cc - 1); ok && c <= std::min(cells - 1, cc + 1); ++c) {
        for (const auto& q : bucket[r * cells + c]) {
          if (!separated_2d(p, q, gap)) {
            ok = false;
            break;
          }
        }
      }
    }
    if (!ok) continue;
    bucket[cr * cells + cc].push_back(p);
    accepted.push_back(p);
  }
  std::sort(accepted.begin(), accepted.end());
  plan.starts = std::move(accepted);
  return plan;
}

/// Adds sigma * N(0,1) to every sample. The noise stream depends only on
/// (seed, data.size()).
inline void add_white_noise(std::span<double> data, double sigma, std::uint64_t seed) {
  if (sigma == 0.0) return;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  for (double& v : data) v += normal(rng);
}

inline Micrograph synthesize(const PlacementPlan1D& plan, const Signal1D& signal, double sigma,
                             std::uint64_t seed) {
  require(sigma >= 0.0 && std::isfinite(sigma), "synthesize: sigma must be finite and >= 0");
  require(signal.length() == plan.L, "synthesize: signal length does not match plan L");
  Micrograph y{{plan.N}, std::vector<double>(plan.N, 0.0), sigma};
  for (std::size_t s : plan.starts) {
    require(s + plan.L <= plan.N, "synthesize: occurrence exceeds micrograph extent");
    for (std::size_t i = 0; i < plan.L; ++i) y.data[s + i] += signal[i];
  }
  add_white_noise(y.data, sigma, seed);
  return y;
}

inline Micrograph synthesize(const PlacementPlan2D& plan, const Image2D& image, double sigma,
                             std::uint64_t seed) {
  require(sigma >= 0.0 && std::isfinite(sigma), "synthesize: sigma must be finite and >= 0");
  require(image.L() == plan.L, "synthesize: image size does not match plan L");
  const std::size_t N = plan.N;
  const std::size_t L = plan.L;
  Micrograph y{{N, N}, std::vector<double>(N * N, 0.0), sigma};
  for (const auto& s : plan.starts) {
    require(s[0] + L <= N && s[1] + L <= N, "synthesize: occurrence exceeds micrograph extent");
    for (std::size_t r = 0; r < L; ++r)
      for (std::size_t c = 0; c < L; ++c) y.data[(s[0] + r) * N + s[1] + c] += image(r, c);
  }
  add_white_noise(y.data, sigma, seed);
  return y;
}

/// Toy-model SNR: M * ||x||^2 / (sigma^2 * pixel count).
inline double snr_of(std::size_t M, double signal_energy, double sigma, std::size_t pixel_count) {
  require(sigma > 0.0, "snr_of: sigma must be positive");
  require(pixel_count > 0, "snr_of: pixel count must be positive");
  return double(M) * signal_energy / (sigma * sigma * double(pixel_count));
}

inline double snr_of(const PlacementPlan1D& plan, const Signal1D& x, double sigma) {
  return snr_of(plan.M(), x.squared_norm(), sigma, plan.N);
}

inline double snr_of(const PlacementPlan2D& plan, const Image2D& x, double sigma) {
  return snr_of(plan.M(), x.squared_norm(), sigma, plan.N * plan.N);
}

// Random test signals --------------------------------------------------------

inline Signal1D random_signal(std::size_t L, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> v(L);
  for (double& s : v) s = normal(rng);
  return Signal1D(std::move(v));
}

/// i.i.d. normal image with its mean removed.
inline Image2D random_zero_mean_image(std::size_t L, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Grid2D g(L, L);
  double mean = 0.0;
  for (double& v : g.vec()) mean += (v = normal(rng));
  mean /= double(g.size());
  for (double& v : g.vec()) v -= mean;
  return Image2D(std::move(g));
}

/// A smooth structured test image: a few random Gaussian blobs of both signs,
/// made zero-mean and scaled to unit RMS.
inline Image2D blob_image(std::size_t L, std::uint64_t seed, std::size_t blobs = 6) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(0.15 * double(L), 0.85 * double(L));
  std::uniform_real_distribution<double> width(0.06 * double(L), 0.2 * double(L));
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  Grid2D g(L, L);
  for (std::size_t b = 0; b < blobs; ++b) {
    const double r0 = pos(rng), c0 = pos(rng), w = width(rng), a = amp(rng);
    for (std::size_t r = 0; r < L; ++r)
      for (std::size_t c = 0; c < L; ++c) {
        const double dr = double(r) - r0, dc = double(c) - c0;
        g(r, c) += a * std::exp(-(dr * dr + dc * dc) / (2 * w * w));
      }
  }
  double mean = 0.0;
  for (double v : g.vec()) mean += v;
  mean /= double(g.size());
  double ss = 0.0;
  for (double& v : g.vec()) {
    v -= mean;
    ss += v * v;
  }
  const double scale = ss > 0 ? std::sqrt(double(g.size()) / ss) : 1.0;
  for (double& v : g.vec()) v *= scale;
  return Image2D(std::move(g));
}

}  // namespace nopick
