#pragma once

// Image recovery from a power spectrum on the 2L x 2L padded grid with the
// relaxed-reflect-reflect iteration
//
//   z <- z + beta (P2(2 P1(z) - z) - P1(z))
//
// where P1 keeps the upper-left L x L block and P2 imposes the Fourier
// magnitudes while keeping the current phases.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "nopick/core.hpp"
#include "nopick/fft.hpp"
#include "nopick/spectrum2d.hpp"

namespace nopick {

struct RRRConfig {
  double beta = 1.0;
  std::size_t iterations = 2000;
  std::uint64_t seed = 0;
};

inline Grid2D project_support(const Grid2D& z, std::size_t L) {
  require(z.rows() == 2 * L && z.cols() == 2 * L, "project_support: expected a 2L x 2L grid");
  Grid2D out(z.rows(), z.cols());
  for (std::size_t r = 0; r < L; ++r)
    for (std::size_t c = 0; c < L; ++c) out(r, c) = z(r, c);
  return out;
}

/// Reusable magnitude projection for one power spectrum.
class MagnitudeProjector {
 public:
  explicit MagnitudeProjector(const PowerSpectrum2D& ps)
      : G_(2 * ps.L), fft_(G_, G_), spec_(fft_.spectrum_size()), mag_(fft_.spectrum_size()) {
    require(ps.values.rows() == G_ && ps.values.cols() == G_,
            "MagnitudeProjector: power spectrum must be 2L x 2L");
    const std::size_t H = fft_.half_cols();
    for (std::size_t r = 0; r < G_; ++r)
      for (std::size_t c = 0; c < H; ++c) mag_[r * H + c] = std::sqrt(std::max(0.0, ps.values(r, c)));
  }

  std::size_t grid() const { return G_; }

  /// out = IDFT( sqrt(ps) * phase(DFT(z)) ), with phase(0) := 1.
  void apply(const Grid2D& z, Grid2D& out) {
    fft_.forward(z.span(), spec_);
    for (std::size_t k = 0; k < spec_.size(); ++k) {
      const double a = std::abs(spec_[k]);
      spec_[k] = a > 0.0 ? spec_[k] * (mag_[k] / a) : std::complex<double>(mag_[k], 0.0);
    }
    if (out.rows() != G_ || out.cols() != G_) out = Grid2D(G_, G_);
    fft_.inverse(spec_, out.span());
    const double norm = 1.0 / double(G_ * G_);
    for (double& v : out.vec()) v *= norm;
  }

 private:
  std::size_t G_;
  RealFFT2D fft_;
  std::vector<std::complex<double>> spec_;
  std::vector<double> mag_;
};

inline Grid2D project_magnitude(const Grid2D& z, const PowerSpectrum2D& ps) {
  require(z.rows() == 2 * ps.L && z.cols() == 2 * ps.L, "project_magnitude: shape mismatch");
  MagnitudeProjector proj(ps);
  Grid2D out;
  proj.apply(z, out);
  return out;
}

struct RRRResult {
  Image2D image;                 // upper-left L x L block of P1(z) at the selected iterate
  double residual = 0.0;         // |P2(2 P1(z) - z) - P1(z)| at the selected iterate
  std::size_t best_iteration = 0;
  std::vector<double> residual_history;
};

/// Runs a fixed budget of RRR iterations from an i.i.d. normal start and
/// returns the iterate with the smallest fixed-point residual.
inline RRRResult rrr_run(const PowerSpectrum2D& ps, const RRRConfig& cfg, const Grid2D* start = nullptr) {
  require(cfg.beta != 0.0, "rrr_run: beta must be nonzero");
  const std::size_t L = ps.L, G = 2 * L;
  MagnitudeProjector P2(ps);

  Grid2D z(G, G);
  if (start) {
    require(start->rows() == G && start->cols() == G, "rrr_run: start must be 2L x 2L");
    z = *start;
  } else {
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal;
    for (double& v : z.vec()) v = normal(rng);
  }

  RRRResult out;
  out.residual = std::numeric_limits<double>::infinity();
  Grid2D p1, reflected(G, G), p2;
  out.residual_history.reserve(cfg.iterations);
  for (std::size_t it = 0; it <= cfg.iterations; ++it) {
    p1 = project_support(z, L);
    for (std::size_t k = 0; k < z.size(); ++k) reflected.vec()[k] = 2.0 * p1.vec()[k] - z.vec()[k];
    P2.apply(reflected, p2);
    double res2 = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
      const double d = p2.vec()[k] - p1.vec()[k];
      res2 += d * d;
    }
    const double res = std::sqrt(res2);
    if (it < cfg.iterations) out.residual_history.push_back(res);
    if (res < out.residual) {
      out.residual = res;
      out.best_iteration = it;
      Grid2D block(L, L);
      for (std::size_t r = 0; r < L; ++r)
        for (std::size_t c = 0; c < L; ++c) block(r, c) = p1(r, c);
      out.image = Image2D(std::move(block));
    }
    if (it == cfg.iterations) break;
    for (std::size_t k = 0; k < z.size(); ++k) z.vec()[k] += cfg.beta * (p2.vec()[k] - p1.vec()[k]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scoring up to the power spectrum's ambiguities

/// min over sign, reflection through the origin and circular shifts of the
/// 2L x 2L padded grid of |g.x_hat - x_true| / |x_true|.
inline double align_and_error(const Image2D& x_hat, const Image2D& x_true) {
  require(x_hat.L() == x_true.L(), "align_and_error: images must have the same size");
  const double ref = x_true.squared_norm();
  if (!(ref > 0.0)) throw DegenerateInput("align_and_error: ground truth has zero norm");
  const std::size_t L = x_true.L(), G = 2 * L;

  // Padded images are isometric under every group element, so the best
  // element maximizes |<g.a, b>|; the distance is then evaluated directly to
  // avoid cancellation when the match is close.
  auto source = [&](std::size_t r, std::size_t c, int reflect, std::size_t sr, std::size_t sc) {
    std::size_t pr = (r + G - sr) % G, pc = (c + G - sc) % G;
    if (reflect) {
      pr = (G - pr) % G;
      pc = (G - pc) % G;
    }
    return std::pair{pr, pc};
  };
  double best_ip = -1.0, best_signed = 0.0;
  int best_reflect = 0;
  std::size_t best_sr = 0, best_sc = 0;
  for (int reflect = 0; reflect < 2; ++reflect) {
    for (std::size_t sr = 0; sr < G; ++sr)
      for (std::size_t sc = 0; sc < G; ++sc) {
        double ip = 0.0;
        for (std::size_t r = 0; r < L; ++r)
          for (std::size_t c = 0; c < L; ++c) {
            const auto [pr, pc] = source(r, c, reflect, sr, sc);
            if (pr < L && pc < L) ip += x_hat(pr, pc) * x_true(r, c);
          }
        if (std::abs(ip) > best_ip) {
          best_ip = std::abs(ip);
          best_signed = ip;
          best_reflect = reflect;
          best_sr = sr;
          best_sc = sc;
        }
      }
  }
  const double sign = best_signed < 0.0 ? -1.0 : 1.0;
  // Pixels of x_hat that leave the L x L block count in full.
  std::vector<char> used(L * L, 0);
  double d2 = 0.0;
  for (std::size_t r = 0; r < L; ++r)
    for (std::size_t c = 0; c < L; ++c) {
      const auto [pr, pc] = source(r, c, best_reflect, best_sr, best_sc);
      double h = 0.0;
      if (pr < L && pc < L) {
        h = sign * x_hat(pr, pc);
        used[pr * L + pc] = 1;
      }
      d2 += (h - x_true(r, c)) * (h - x_true(r, c));
    }
  for (std::size_t k = 0; k < L * L; ++k)
    if (!used[k]) d2 += x_hat.pixels().vec()[k] * x_hat.pixels().vec()[k];
  return std::sqrt(d2 / ref);
}

/// Applies a group element to an L x L image on the padded grid and crops
/// the upper-left block; used to build test fixtures.
inline Grid2D transform_padded(const Image2D& x, bool negate, bool reflect, std::size_t shift_r,
                               std::size_t shift_c) {
  const std::size_t L = x.L(), G = 2 * L;
  Grid2D out(G, G);
  for (std::size_t r = 0; r < L; ++r)
    for (std::size_t c = 0; c < L; ++c) {
      std::size_t pr = r, pc = c;
      if (reflect) {
        pr = (G - pr) % G;
        pc = (G - pc) % G;
      }
      pr = (pr + shift_r) % G;
      pc = (pc + shift_c) % G;
      out(pr, pc) = negate ? -x(r, c) : x(r, c);
    }
  return out;
}

}  // namespace nopick
