#pragma once

// Power spectrum of a 2-D target estimated from the averaged power spectra
// of many micrographs.
//
// Each N x N micrograph is zero-padded to P >= N + L - 1 so that the inverse
// transform of |Y|^2 is the linear (not circular) autocorrelation. Shifts in
// [-(L-1), L-1]^2 see no cross terms between separated occurrences, so the
// debiased, per-occurrence autocorrelation on that window equals that of the
// target. Folding the window onto a 2L x 2L grid and transforming gives the
// power spectrum of the target zero-padded to 2L x 2L.
//
// DFT convention: unnormalized forward transform, so white noise of variance
// sigma^2 contributes N^2 sigma^2 per bin in expectation.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "nopick/core.hpp"
#include "nopick/fft.hpp"
#include "nopick/simkit.hpp"

namespace nopick {

/// Squared Fourier magnitudes on the 2L x 2L padded grid, full (not half)
/// spectrum, non-negative.
struct PowerSpectrum2D {
  std::size_t L = 0;
  Grid2D values;  // 2L x 2L
};

/// |DFT|^2 of an L x L image zero-padded to 2L x 2L.
inline PowerSpectrum2D exact_power_spectrum(const Image2D& x) {
  const std::size_t L = x.L(), G = 2 * L;
  Grid2D padded(G, G);
  for (std::size_t r = 0; r < L; ++r)
    for (std::size_t c = 0; c < L; ++c) padded(r, c) = x(r, c);
  const auto spec = dft2_full(padded);
  PowerSpectrum2D ps{L, Grid2D(G, G)};
  for (std::size_t k = 0; k < spec.size(); ++k) ps.values.vec()[k] = std::norm(spec[k]);
  return ps;
}

/// Averages |DFT(micrograph)|^2 over a stream of equally-sized micrographs.
class PowerSpectrumEstimator {
 public:
  PowerSpectrumEstimator(std::size_t N, std::size_t L)
      : N_(N), L_(L), P_(padded_extent(N, L)), fft_(P_, P_), padded_(P_ * P_, 0.0),
        spec_(fft_.spectrum_size()), power_(fft_.spectrum_size(), 0.0) {
    require(L >= 1 && N >= 1, "PowerSpectrumEstimator: N and L must be positive");
  }

  std::size_t N() const { return N_; }
  std::size_t L() const { return L_; }
  std::size_t padded() const { return P_; }
  std::size_t count() const { return count_; }

  void add(std::span<const double> image) {
    if (image.size() != N_ * N_)
      throw InvalidArgument("estimate_power_spectrum_2d: micrograph sizes differ");
    for (std::size_t r = 0; r < N_; ++r)
      std::copy_n(image.data() + r * N_, N_, padded_.data() + r * P_);
    fft_.forward(padded_, spec_);
    for (std::size_t k = 0; k < spec_.size(); ++k) power_[k] += std::norm(spec_[k]);
    ++count_;
  }

  void add(const Micrograph& y) {
    if (y.ndims() != 2 || y.extents[0] != N_ || y.extents[1] != N_)
      throw InvalidArgument("estimate_power_spectrum_2d: micrograph sizes differ");
    add(y.data);
  }

  /// Sum over micrographs of the linear autocorrelation at shift (dr, dc),
  /// |dr|, |dc| <= L-1, before debiasing.
  Grid2D raw_autocorrelation() const {
    std::vector<std::complex<double>> tmp(power_.begin(), power_.end());
    std::vector<double> ac(P_ * P_);
    fft_.inverse(tmp, ac);
    const std::size_t W = 2 * L_ - 1;
    Grid2D out(W, W);
    const double norm = 1.0 / double(P_ * P_);
    for (std::size_t i = 0; i < W; ++i)
      for (std::size_t j = 0; j < W; ++j) {
        const std::ptrdiff_t dr = std::ptrdiff_t(i) - std::ptrdiff_t(L_ - 1);
        const std::ptrdiff_t dc = std::ptrdiff_t(j) - std::ptrdiff_t(L_ - 1);
        const std::size_t r = std::size_t((dr + std::ptrdiff_t(P_)) % std::ptrdiff_t(P_));
        const std::size_t c = std::size_t((dc + std::ptrdiff_t(P_)) % std::ptrdiff_t(P_));
        out(i, j) = ac[r * P_ + c] * norm;
      }
    return out;
  }

  /// Debiased power spectrum of one occurrence on the 2L x 2L grid.
  PowerSpectrum2D finalize(double sigma, std::uint64_t M_total) const {
    if (count_ == 0) throw EmptyAccumulator("estimate_power_spectrum_2d: no micrographs");
    require(M_total > 0, "estimate_power_spectrum_2d: M_total must be positive");
    require(sigma >= 0.0, "estimate_power_spectrum_2d: sigma must be non-negative");
    Grid2D ac = raw_autocorrelation();
    // The noise floor N^2 sigma^2 per bin is a spike of that height at zero shift.
    ac(L_ - 1, L_ - 1) -= double(count_) * double(N_ * N_) * sigma * sigma;
    const double scale = 1.0 / double(M_total);

    const std::size_t G = 2 * L_;
    Grid2D folded(G, G);
    for (std::size_t i = 0; i < 2 * L_ - 1; ++i)
      for (std::size_t j = 0; j < 2 * L_ - 1; ++j) {
        const std::size_t r = (i + G - (L_ - 1)) % G;
        const std::size_t c = (j + G - (L_ - 1)) % G;
        folded(r, c) = ac(i, j) * scale;
      }
    // The folded autocorrelation is centro-symmetric, so its DFT is real.
    const auto spec = dft2_full(folded);
    PowerSpectrum2D ps{L_, Grid2D(G, G)};
    for (std::size_t k = 0; k < spec.size(); ++k) ps.values.vec()[k] = std::max(0.0, spec[k].real());
    return ps;
  }

  static std::size_t padded_extent(std::size_t N, std::size_t L) {
    // Smallest 2^a 3^b 5^c 7^d >= N + L - 1 keeps FFTW on its fast paths.
    std::size_t n = N + L - 1;
    for (;; ++n) {
      std::size_t m = n;
      for (std::size_t p : {2u, 3u, 5u, 7u})
        while (m % p == 0) m /= p;
      if (m == 1) return n;
    }
  }

 private:
  std::size_t N_, L_, P_;
  RealFFT2D fft_;
  std::vector<double> padded_;
  std::vector<std::complex<double>> spec_;
  std::vector<double> power_;
  std::size_t count_ = 0;
};

inline PowerSpectrum2D estimate_power_spectrum_2d(std::span<const Micrograph> micrographs,
                                                  std::size_t L, double sigma,
                                                  std::uint64_t M_total) {
  require(!micrographs.empty(), "estimate_power_spectrum_2d: no micrographs");
  const auto& first = micrographs.front();
  require(first.ndims() == 2 && first.extents[0] == first.extents[1],
          "estimate_power_spectrum_2d: micrographs must be square 2-D arrays");
  PowerSpectrumEstimator est(first.extents[0], L);
  for (const auto& y : micrographs) est.add(y);
  return est.finalize(sigma, M_total);
}

}  // namespace nopick
