#pragma once

// Independent reference implementations used only by tests.

#include <cmath>
#include <complex>
#include <cstddef>
#include <random>
#include <vector>

#include "nopick/core.hpp"
#include "nopick/moments.hpp"

namespace oracle {

// Zero-padded moments by looping over every index triple of the definition.
inline nopick::MomentSet triple_loop(const std::vector<double>& z, std::size_t L) {
  const std::ptrdiff_t m = std::ptrdiff_t(z.size());
  auto at = [&](std::ptrdiff_t i) { return (i >= 0 && i < m) ? z[std::size_t(i)] : 0.0; };
  nopick::MomentSet out(L, z.size());
  long double s1 = 0;
  for (std::ptrdiff_t i = 0; i < m; ++i) s1 += at(i);
  out.a1 = double(s1 / m);
  for (std::size_t l = 0; l < L; ++l) {
    long double s = 0;
    for (std::ptrdiff_t i = 0; i < m; ++i) s += (long double)at(i) * at(i + std::ptrdiff_t(l));
    out.a2[l] = double(s / m);
  }
  for (std::size_t l1 = 0; l1 < L; ++l1)
    for (std::size_t l2 = 0; l2 < L; ++l2) {
      long double s = 0;
      for (std::ptrdiff_t i = 0; i < m; ++i)
        s += (long double)at(i) * at(i + std::ptrdiff_t(l1)) * at(i + std::ptrdiff_t(l2));
      out.at3(l1, l2) = double(s / m);
    }
  return out;
}

inline double max_abs(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// max |a - b| / max |b| per moment order, maximized over orders.
inline double moment_rel_err(const nopick::MomentSet& a, const nopick::MomentSet& b) {
  auto rel = [](const std::vector<double>& x, const std::vector<double>& y) {
    double d = 0;
    for (std::size_t i = 0; i < x.size(); ++i) d = std::max(d, std::abs(x[i] - y[i]));
    const double s = max_abs(y);
    return s == 0 ? d : d / s;
  };
  const double e1 = b.a1 == 0 ? std::abs(a.a1) : std::abs(a.a1 - b.a1) / std::abs(b.a1);
  return std::max({e1, rel(a.a2, b.a2), rel(a.a3, b.a3)});
}

// Direct O(n^4) 2-D DFT, unnormalized forward convention.
inline std::vector<std::complex<double>> naive_dft2(const nopick::Grid2D& g) {
  const std::size_t R = g.rows(), C = g.cols();
  std::vector<std::complex<double>> out(R * C);
  const double tau = 2.0 * std::acos(-1.0);
  for (std::size_t u = 0; u < R; ++u)
    for (std::size_t v = 0; v < C; ++v) {
      std::complex<double> s = 0;
      for (std::size_t r = 0; r < R; ++r)
        for (std::size_t c = 0; c < C; ++c) {
          const double ph = -tau * (double(u * r) / double(R) + double(v * c) / double(C));
          s += g(r, c) * std::complex<double>(std::cos(ph), std::sin(ph));
        }
      out[u * C + v] = s;
    }
  return out;
}

inline std::vector<double> normals(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

// Signal with |x[0]|, |x[L-1]| > edge and |mean| > min_mean, by redrawing.
inline nopick::Signal1D generic_signal(std::size_t L, std::uint64_t seed, double edge = 0.3,
                                       double min_mean = 0.1) {
  for (std::uint64_t k = 0;; ++k) {
    auto v = normals(L, nopick::derive_seed(seed, k));
    double mean = 0;
    for (double x : v) mean += x;
    mean /= double(L);
    if (std::abs(v[0]) > edge && std::abs(v[L - 1]) > edge && std::abs(mean) > min_mean)
      return nopick::Signal1D(v);
  }
}

}  // namespace oracle
