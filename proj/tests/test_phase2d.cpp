#include <gtest/gtest.h>

#include "nopick/phase2d.hpp"
#include "nopick/simkit.hpp"
#include "oracles.hpp"

using namespace nopick;

namespace {
Grid2D padded(const Image2D& x) {
  const std::size_t L = x.L();
  Grid2D g(2 * L, 2 * L);
  for (std::size_t r = 0; r < L; ++r)
    for (std::size_t c = 0; c < L; ++c) g(r, c) = x(r, c);
  return g;
}
}  // namespace

TEST(Support, AllOnes) {
  const Grid2D z(4, 4, 1.0);
  const auto p = project_support(z, 2);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(p(r, c), (r < 2 && c < 2) ? 1.0 : 0.0);
}

TEST(Support, Idempotent) {
  const Grid2D z(8, 8, oracle::normals(64, 1));
  const auto p = project_support(z, 4);
  EXPECT_EQ(project_support(p, 4), p);
  EXPECT_THROW(project_support(z, 3), InvalidArgument);
}

TEST(Magnitude, CorrectMagnitudesUnchanged) {
  const Image2D x = random_zero_mean_image(6, 2);
  const Grid2D z = padded(x);
  const auto out = project_magnitude(z, exact_power_spectrum(x));
  for (std::size_t k = 0; k < z.size(); ++k) EXPECT_NEAR(out.vec()[k], z.vec()[k], 1e-12);
}

TEST(Magnitude, ZeroInputTakesUnitPhase) {
  const Image2D x = random_zero_mean_image(4, 3);
  const auto ps = exact_power_spectrum(x);
  const auto out = project_magnitude(Grid2D(8, 8), ps);
  // Inverse DFT of sqrt(ps) with all phases 1.
  const std::size_t G = 8;
  const double tau = 2.0 * std::acos(-1.0);
  for (std::size_t r = 0; r < G; ++r)
    for (std::size_t c = 0; c < G; ++c) {
      double s = 0;
      for (std::size_t u = 0; u < G; ++u)
        for (std::size_t v = 0; v < G; ++v)
          s += std::sqrt(ps.values(u, v)) * std::cos(tau * double(u * r + v * c) / double(G));
      EXPECT_NEAR(out(r, c), s / double(G * G), 1e-12);
    }
}

TEST(Magnitude, OutputHasTargetPowerSpectrum) {
  const Image2D x = random_zero_mean_image(8, 4);
  const auto ps = exact_power_spectrum(x);
  const Grid2D z(16, 16, oracle::normals(256, 5));
  const auto out = project_magnitude(z, ps);
  const auto spec = dft2_full(out);
  double peak = 0;
  for (double v : ps.values.vec()) peak = std::max(peak, v);
  for (std::size_t k = 0; k < spec.size(); ++k) EXPECT_NEAR(std::norm(spec[k]), ps.values.vec()[k], 1e-10 * peak);
}

TEST(Rrr, TruthIsAFixedPoint) {
  const Image2D x = random_zero_mean_image(8, 6);
  const Grid2D z = padded(x);
  RRRConfig cfg;
  cfg.iterations = 5;
  const auto res = rrr_run(exact_power_spectrum(x), cfg, &z);
  EXPECT_LT(res.residual, 1e-12 * std::sqrt(x.squared_norm()));
  EXPECT_EQ(res.best_iteration, 0u);
  EXPECT_LT(align_and_error(res.image, x), 1e-12);
}

TEST(Rrr, ResidualHistoryAndDeterminism) {
  const Image2D x = random_zero_mean_image(6, 7);
  RRRConfig cfg;
  cfg.iterations = 50;
  cfg.seed = 3;
  const auto a = rrr_run(exact_power_spectrum(x), cfg);
  const auto b = rrr_run(exact_power_spectrum(x), cfg);
  EXPECT_EQ(a.residual_history.size(), 50u);
  EXPECT_EQ(a.image, b.image);
  EXPECT_LE(a.residual, *std::min_element(a.residual_history.begin(), a.residual_history.end()));
  RRRConfig bad;
  bad.beta = 0.0;
  EXPECT_THROW(rrr_run(exact_power_spectrum(x), bad), InvalidArgument);
}

TEST(Rrr, RecoversSmallImage) {
  // A small instance converges for most seeds; require one of the first few.
  const Image2D x = random_zero_mean_image(8, 8);
  double best = 1.0;
  for (std::uint64_t s = 0; s < 5 && best >= 1e-3; ++s) {
    RRRConfig cfg;
    cfg.seed = s;
    best = std::min(best, align_and_error(rrr_run(exact_power_spectrum(x), cfg).image, x));
  }
  EXPECT_LT(best, 1e-3);
}

TEST(Align, Identity) {
  const Image2D x = random_zero_mean_image(5, 9);
  EXPECT_LT(align_and_error(x, x), 1e-14);
}

TEST(Align, GroupSoundness) {
  // Every group element whose image still lies in the L x L block scores 0.
  const std::size_t L = 5, G = 10;
  const Image2D x = random_zero_mean_image(L, 10);
  std::size_t members = 0;
  for (int neg = 0; neg < 2; ++neg)
    for (int refl = 0; refl < 2; ++refl)
      for (std::size_t sr = 0; sr < G; ++sr)
        for (std::size_t sc = 0; sc < G; ++sc) {
          const Grid2D g = transform_padded(x, neg, refl, sr, sc);
          double outside = 0;
          for (std::size_t r = 0; r < G; ++r)
            for (std::size_t c = 0; c < G; ++c)
              if (r >= L || c >= L) outside += std::abs(g(r, c));
          if (outside > 0) continue;
          Grid2D block(L, L);
          for (std::size_t r = 0; r < L; ++r)
            for (std::size_t c = 0; c < L; ++c) block(r, c) = g(r, c);
          EXPECT_LT(align_and_error(Image2D(block), x), 1e-12);
          ++members;
        }
  EXPECT_EQ(members, 4u);
  Grid2D nr(L, L);
  for (std::size_t r = 0; r < L; ++r)
    for (std::size_t c = 0; c < L; ++c) nr(r, c) = -x(L - 1 - r, L - 1 - c);
  EXPECT_LT(align_and_error(Image2D(nr), x), 1e-12);
}

TEST(Align, OrthogonalPerturbation) {
  const std::size_t L = 12;
  const Image2D x = random_zero_mean_image(L, 12);
  auto p = oracle::normals(L * L, 13);
  double ip = 0, nx = x.squared_norm();
  for (std::size_t k = 0; k < p.size(); ++k) ip += p[k] * x.pixels().vec()[k];
  double np = 0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    p[k] -= ip / nx * x.pixels().vec()[k];
    np += p[k] * p[k];
  }
  Grid2D xh(L, L);
  for (std::size_t k = 0; k < p.size(); ++k) xh.vec()[k] = x.pixels().vec()[k] + p[k] / std::sqrt(np);
  EXPECT_NEAR(align_and_error(Image2D(xh), x), 1.0 / std::sqrt(nx), 1e-12);
}

TEST(Align, ZeroTruthThrows) {
  EXPECT_THROW(align_and_error(Image2D(Grid2D(3, 3, 1.0)), Image2D(Grid2D(3, 3, 0.0))), DegenerateInput);
  EXPECT_THROW(align_and_error(Image2D(Grid2D(3, 3)), Image2D(Grid2D(4, 4))), InvalidArgument);
}
