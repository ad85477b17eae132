#include <gtest/gtest.h>

#include <cstring>

#include "nopick/moments.hpp"
#include "nopick/simkit.hpp"
#include "oracles.hpp"

using namespace nopick;

TEST(Placement, OnlyFeasibleStartsWhenTight) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto plan = place_occurrences(3, 2, 1, 0, seed);
    ASSERT_EQ(plan.M(), 1u);
    EXPECT_LE(plan.starts[0], 1u);
  }
}

TEST(Placement, RejectsInvalidExtents) {
  EXPECT_THROW(place_occurrences(4, 3, 1, 0, 0), InvalidArgument);
  EXPECT_THROW(place_occurrences(10, 0, 1, 0, 0), InvalidArgument);
  EXPECT_THROW(place_occurrences_2d(4, 3, 1, 0, 0), InvalidArgument);
}

TEST(Placement, PairsRespectGapExhaustively) {
  // N=10, L=3: every returned pair must be at least 5 apart.
  std::size_t pairs = 0;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const auto plan = place_occurrences(10, 3, 2, 0, seed);
    for (std::size_t i = 0; i < plan.M(); ++i)
      for (std::size_t j = i + 1; j < plan.M(); ++j) {
        EXPECT_GE(plan.starts[j] - plan.starts[i], 5u);
        ++pairs;
      }
    for (std::size_t s : plan.starts) EXPECT_LE(s + 3, 10u);
  }
  EXPECT_GT(pairs, 0u);
}

TEST(Placement, ToyDensity) {
  const std::size_t M = 1000, L = 21;
  const auto plan = place_occurrences(410 * M, L, M, 0, 11);
  EXPECT_EQ(plan.M(), M);
  EXPECT_NEAR(plan.density(), 0.0512, 5e-4);
  for (std::size_t i = 1; i < plan.M(); ++i) EXPECT_GE(plan.starts[i] - plan.starts[i - 1], 2 * L - 1);
}

TEST(Placement, ReportsShortfall) {
  // At most two starts fit in N=10 with gap 5.
  const auto plan = place_occurrences(10, 3, 5, 1000, 4);
  EXPECT_LE(plan.M(), 2u);
  EXPECT_EQ(plan.proposals, 1000u);
}

TEST(Placement, Deterministic) {
  const auto a = place_occurrences(5000, 7, 200, 0, 99);
  const auto b = place_occurrences(5000, 7, 200, 0, 99);
  EXPECT_EQ(a.starts, b.starts);
  const auto c = place_occurrences(5000, 7, 200, 0, 100);
  EXPECT_NE(a.starts, c.starts);
}

TEST(Placement2D, PerAxisSeparationExhaustive) {
  const std::size_t L = 6, gap = 2 * L - 1;
  const auto plan = place_occurrences_2d(200, L, 150, 0, 3);
  EXPECT_GT(plan.M(), 50u);
  for (std::size_t i = 0; i < plan.M(); ++i) {
    EXPECT_LE(plan.starts[i][0] + L, 200u);
    EXPECT_LE(plan.starts[i][1] + L, 200u);
    for (std::size_t j = i + 1; j < plan.M(); ++j) {
      const auto& a = plan.starts[i];
      const auto& b = plan.starts[j];
      const std::size_t dr = a[0] > b[0] ? a[0] - b[0] : b[0] - a[0];
      const std::size_t dc = a[1] > b[1] ? a[1] - b[1] : b[1] - a[1];
      EXPECT_TRUE(dr >= gap || dc >= gap);
    }
  }
}

TEST(Synthesize, NoiselessSinglePlacement) {
  PlacementPlan1D plan{5, 2, 3, {0}, 1};
  const auto y = synthesize(plan, Signal1D({1, 2}), 0.0, 0);
  EXPECT_EQ(y.data, (std::vector<double>{1, 2, 0, 0, 0}));
  EXPECT_EQ(y.extents, (std::vector<std::size_t>{5}));
}

TEST(Synthesize, ExtentMismatch) {
  PlacementPlan1D plan{5, 2, 3, {0}, 1};
  EXPECT_THROW(synthesize(plan, Signal1D({1, 2, 3}), 0.0, 0), InvalidArgument);
  PlacementPlan1D bad{5, 2, 3, {4}, 1};
  EXPECT_THROW(synthesize(bad, Signal1D({1, 2}), 0.0, 0), InvalidArgument);
}

TEST(Synthesize, DeterministicBytes) {
  const auto plan = place_occurrences(10000, 5, 300, 0, 1);
  const auto x = random_signal(5, 2);
  const auto a = synthesize(plan, x, 1.5, 77);
  const auto b = synthesize(plan, x, 1.5, 77);
  EXPECT_EQ(0, std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(double)));
  const auto c = synthesize(plan, x, 1.5, 78);
  EXPECT_NE(a.data, c.data);
}

TEST(Synthesize, NoiseStatistics) {
  PlacementPlan1D plan{200000, 3, 5, {}, 0};
  const auto y = synthesize(plan, Signal1D({1, 1, 1}), 2.0, 5);
  double s = 0, s2 = 0;
  for (double v : y.data) {
    s += v;
    s2 += v * v;
  }
  const double n = double(y.data.size());
  EXPECT_NEAR(s / n, 0.0, 4 * 2.0 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 4.0, 4 * 4.0 * std::sqrt(2.0 / n));
}

TEST(Synthesize, NoiselessMomentsMatchForwardModel) {
  // Occurrences are separated and interior, so the micrograph moments equal
  // the forward model at gamma = M L / N up to rounding.
  const std::size_t L = 6;
  const auto x = random_signal(L, 9);
  const auto plan = place_occurrences(20000, L, 400, 0, 10);
  const auto y = synthesize(plan, x, 0.0, 0);
  const double gamma = double(plan.M() * L) / double(plan.N);
  const auto est = compute_moments(y.data, L);
  const auto fm = forward_model(x, gamma, 0.0);
  EXPECT_LT(oracle::moment_rel_err(est, fm), 1e-12);
}

TEST(Snr, DirectSubstitution) {
  EXPECT_DOUBLE_EQ(snr_of(1, 4.0, 2.0, 1), 1.0);
  EXPECT_THROW(snr_of(1, 4.0, 0.0, 1), InvalidArgument);
}

TEST(Snr, OneDimensionalToyLevel) {
  // sigma=3, L=21, N=410 M with a unit-variance signal: SNR about 1/175.
  std::vector<double> v = oracle::normals(21, 3);
  double e = 0;
  for (double s : v) e += s * s;
  for (double& s : v) s *= std::sqrt(21.0 / e);
  const Signal1D x(v);
  const auto plan = place_occurrences(410 * 500, 21, 500, 0, 4);
  ASSERT_EQ(plan.M(), 500u);
  EXPECT_NEAR(1.0 / snr_of(plan, x, 3.0), 175.0, 2.0);
}

TEST(Snr, TwoDimensionalMatchesPlantedEnergy) {
  // Four 50x50 occurrences in a 250x250 micrograph, sigma=3.
  const Image2D x = random_zero_mean_image(50, 1);
  const auto plan = place_occurrences_2d(250, 50, 4, 100000, 2);
  ASSERT_EQ(plan.M(), 4u);
  const auto clean = synthesize(plan, x, 0.0, 0);
  double planted = 0;
  for (double v : clean.data) planted += v * v;
  EXPECT_NEAR(snr_of(plan, x, 3.0), planted / (9.0 * 250.0 * 250.0), 1e-12);
}

TEST(TestSignals, BlobImageIsZeroMeanUnitRms) {
  const Image2D x = blob_image(16, 5);
  double s = 0;
  for (double v : x.pixels().vec()) s += v;
  EXPECT_NEAR(s, 0.0, 1e-10);
  EXPECT_NEAR(x.squared_norm(), 256.0, 1e-9);
}
