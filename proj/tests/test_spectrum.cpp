#include <gtest/gtest.h>

#include "nopick/fft.hpp"
#include "nopick/simkit.hpp"
#include "nopick/spectrum2d.hpp"
#include "oracles.hpp"

using namespace nopick;

namespace {
double max_rel(const Grid2D& a, const Grid2D& b) {
  double d = 0, s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    d = std::max(d, std::abs(a.vec()[k] - b.vec()[k]));
    s = std::max(s, std::abs(b.vec()[k]));
  }
  return d / s;
}
}  // namespace

TEST(Fft, FullSpectrumMatchesNaiveDft) {
  Grid2D g(6, 5, oracle::normals(30, 1));
  const auto fast = dft2_full(g);
  const auto ref = oracle::naive_dft2(g);
  for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_LT(std::abs(fast[k] - ref[k]), 1e-12);
}

TEST(Fft, InverseRoundTrip) {
  const std::size_t R = 8, C = 6;
  RealFFT2D fft(R, C);
  Grid2D g(R, C, oracle::normals(R * C, 2));
  std::vector<std::complex<double>> spec(fft.spectrum_size());
  fft.forward(g.span(), spec);
  std::vector<double> back(R * C);
  fft.inverse(spec, back);
  for (std::size_t k = 0; k < back.size(); ++k) EXPECT_NEAR(back[k] / double(R * C), g.vec()[k], 1e-13);
}

TEST(PowerSpectrum, ExactMatchesNaiveDft) {
  const Image2D x = random_zero_mean_image(5, 3);
  const auto ps = exact_power_spectrum(x);
  Grid2D padded(10, 10);
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 0; c < 5; ++c) padded(r, c) = x(r, c);
  const auto ref = oracle::naive_dft2(padded);
  for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(ps.values.vec()[k], std::norm(ref[k]), 1e-11);
}

TEST(PowerSpectrum, SingleCleanCopyAtCorner) {
  const std::size_t L = 6, N = 40;
  const Image2D x = random_zero_mean_image(L, 4);
  PlacementPlan2D plan{N, L, 2 * L - 1, {{0, 0}}, 1};
  const auto y = synthesize(plan, x, 0.0, 0);
  const auto est = estimate_power_spectrum_2d(std::span(&y, 1), L, 0.0, 1);
  EXPECT_LT(max_rel(est.values, exact_power_spectrum(x).values), 1e-10);
}

TEST(PowerSpectrum, SeparatedCopiesHaveNoCrossTerms) {
  // Separation makes cross-correlations vanish at every shift the estimator
  // keeps, so M separated clean copies give M |X|^2 exactly.
  const std::size_t L = 5, N = 64;
  const Image2D x = random_zero_mean_image(L, 5);
  std::vector<Micrograph> ys;
  std::uint64_t M = 0;
  for (std::uint64_t k = 0; k < 3; ++k) {
    const auto plan = place_occurrences_2d(N, L, 20, 0, k);
    M += plan.M();
    ys.push_back(synthesize(plan, x, 0.0, 0));
  }
  const auto est = estimate_power_spectrum_2d(ys, L, 0.0, M);
  EXPECT_LT(max_rel(est.values, exact_power_spectrum(x).values), 1e-10);
}

TEST(PowerSpectrum, NoiseFloorConstant) {
  // With the unnormalized DFT, E|DFT(noise)|^2 = N^2 sigma^2 in every bin.
  const std::size_t N = 32, K = 400;
  const double sigma = 1.3;
  RealFFT2D fft(N, N);
  std::vector<std::complex<double>> spec(fft.spectrum_size());
  std::vector<double> mean(spec.size(), 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<double> y(N * N, 0.0);
    add_white_noise(y, sigma, derive_seed(3, k));
    fft.forward(y, spec);
    for (std::size_t i = 0; i < spec.size(); ++i) mean[i] += std::norm(spec[i]) / double(K);
  }
  const double expected = double(N * N) * sigma * sigma;
  double avg = 0;
  for (double v : mean) avg += v / double(mean.size());
  // Each bin averages K exponential(ish) variables; the bin-average pools
  // ~N^2/2 of them.
  EXPECT_NEAR(avg / expected, 1.0, 0.01);
  for (double v : mean) EXPECT_NEAR(v / expected, 1.0, 6.0 / std::sqrt(double(K)) * std::sqrt(2.0));
}

TEST(PowerSpectrum, DebiasedNoiseIsSmall) {
  // Pure noise, debiased: the zero-shift autocorrelation loses its N^2 sigma^2
  // per-micrograph floor.
  const std::size_t L = 4, N = 64, K = 50;
  PowerSpectrumEstimator est(N, L);
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<double> y(N * N, 0.0);
    add_white_noise(y, 1.0, derive_seed(4, k));
    est.add(y);
  }
  const Grid2D ac = est.raw_autocorrelation();
  const double floor = double(K * N * N);
  EXPECT_NEAR(ac(L - 1, L - 1) / floor, 1.0, 4.0 * std::sqrt(2.0 / floor));
}

TEST(PowerSpectrum, SizeMismatchThrows) {
  PowerSpectrumEstimator est(16, 3);
  EXPECT_THROW(est.add(std::vector<double>(15 * 15)), InvalidArgument);
  std::vector<Micrograph> ys(2);
  ys[0] = Micrograph{{16, 16}, std::vector<double>(256), {}};
  ys[1] = Micrograph{{17, 17}, std::vector<double>(289), {}};
  EXPECT_THROW(estimate_power_spectrum_2d(ys, 3, 1.0, 1), InvalidArgument);
}

TEST(PowerSpectrum, EmptyAndNonNegative) {
  PowerSpectrumEstimator est(16, 3);
  EXPECT_THROW(est.finalize(1.0, 1), EmptyAccumulator);
  std::vector<double> y(256, 0.0);
  add_white_noise(y, 2.0, 5);
  est.add(y);
  const auto ps = est.finalize(2.0, 1);
  for (double v : ps.values.vec()) EXPECT_GE(v, 0.0);
}

TEST(PowerSpectrum, PaddedExtentIsSmooth) {
  EXPECT_EQ(PowerSpectrumEstimator::padded_extent(512, 16), 540u);  // 2^2 3^3 5
  EXPECT_EQ(PowerSpectrumEstimator::padded_extent(10, 1), 10u);
}
