#pragma once

// First-, second- and third-order autocorrelations: direct evaluation, a
// one-pass mergeable streaming estimator, and the N -> infinity forward model
// relating micrograph moments to signal moments.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "nopick/core.hpp"

namespace nopick {

/// a1, a2[l] for l in [0, L-1] and the full square a3[l1, l2], normalized by
/// pixel_count.
struct MomentSet {
  std::size_t L = 0;
  double a1 = 0.0;
  std::vector<double> a2;
  std::vector<double> a3;  // row-major L x L
  std::uint64_t pixel_count = 0;

  MomentSet() = default;
  explicit MomentSet(std::size_t L_, std::uint64_t pixels = 0)
      : L(L_), a2(L_, 0.0), a3(L_ * L_, 0.0), pixel_count(pixels) {}

  double& at3(std::size_t l1, std::size_t l2) { return a3[l1 * L + l2]; }
  double at3(std::size_t l1, std::size_t l2) const { return a3[l1 * L + l2]; }

  friend bool operator==(const MomentSet&, const MomentSet&) = default;
};

/// Index pairs (l1, l2) of a3 that carry no noise bias, with the symmetry
/// a3[l1,l2] = a3[l2,l1] folded: 2 <= l1 <= L-1, 1 <= l2 <= l1-1.
/// Together with a1 and a2[1..L-1] these are the L(L-1)/2 + 1 coefficients
/// used by the least-squares fit.
inline std::vector<std::pair<std::size_t, std::size_t>> unbiased_a3_entries(std::size_t L) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (L >= 3) out.reserve((L - 1) * (L - 2) / 2);
  for (std::size_t l1 = 2; l1 < L; ++l1)
    for (std::size_t l2 = 1; l2 < l1; ++l2) out.emplace_back(l1, l2);
  return out;
}

/// Direct evaluation with zero-padded indexing, normalized by m = len(z).
/// Reference oracle for the streaming path.
inline MomentSet brute_autocorr(std::span<const double> z, std::size_t L) {
  require(L >= 1, "brute_autocorr: L must be at least 1");
  require(!z.empty(), "brute_autocorr: empty input");
  const std::size_t m = z.size();
  auto at = [&](std::size_t i) { return i < m ? z[i] : 0.0; };

  MomentSet out(L, m);
  double s1 = 0.0;
  for (double v : z) s1 += v;
  out.a1 = s1 / double(m);
  for (std::size_t l = 0; l < L; ++l) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += z[i] * at(i + l);
    out.a2[l] = s / double(m);
  }
  for (std::size_t l1 = 0; l1 < L; ++l1)
    for (std::size_t l2 = l1; l2 < L; ++l2) {
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) s += z[i] * at(i + l1) * at(i + l2);
      out.at3(l1, l2) = out.at3(l2, l1) = s / double(m);
    }
  return out;
}

inline MomentSet brute_autocorr(const Signal1D& x) { return brute_autocorr(x.samples(), x.length()); }

// ---------------------------------------------------------------------------
// Streaming accumulator

enum class JunctionMode {
  exact,  ///< carry the last L-1 samples so chunk boundaries are invisible
  paper,  ///< treat every chunk as an independent zero-padded segment
};

namespace detail {

/// Neumaier-compensated running sum. Merging is bitwise commutative.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }

  double value() const { return sum + comp; }

  static CompensatedSum combine(const CompensatedSum& a, const CompensatedSum& b) {
    const double s = a.sum + b.sum;
    const double bb = s - a.sum;
    const double err = (a.sum - (s - bb)) + (b.sum - bb);  // exact, symmetric in (a, b)
    return {s, err + (a.comp + b.comp)};
  }
};

/// sum_i a[i] * b[i] with four independent partial sums.
inline double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

}  // namespace detail

class MomentAccumulator {
 public:
  static constexpr std::size_t kBlock = 4096;

  MomentAccumulator() = default;
  explicit MomentAccumulator(std::size_t L) : L_(L), s2_(L), s3_(L * (L + 1) / 2) {
    require(L >= 1, "MomentAccumulator: L must be at least 1");
  }

  std::size_t L() const { return L_; }
  std::uint64_t pixels_seen() const { return pixels_; }
  std::span<const double> tail() const { return tail_; }

  /// Feeds the next chunk of the current stream.
  void accumulate(std::span<const double> chunk, JunctionMode mode = JunctionMode::exact) {
    require(L_ >= 1, "MomentAccumulator: not initialized");
    if (chunk.empty()) return;
    pixels_ += chunk.size();
    if (tail_.empty()) {
      consume(chunk);
    } else {
      buf_.assign(tail_.begin(), tail_.end());
      buf_.insert(buf_.end(), chunk.begin(), chunk.end());
      tail_.clear();
      consume(buf_);
    }
    if (mode == JunctionMode::paper) finish_stream();
  }

  /// Closes the current stream: pending starts are evaluated with zero
  /// padding. The next chunk begins an independent micrograph.
  void finish_stream() {
    if (tail_.empty()) return;
    add_starts(tail_, tail_.size());
    tail_.clear();
  }

  MomentSet finalize() const {
    if (pixels_ == 0) throw EmptyAccumulator("finalize: accumulator has seen no pixels");
    MomentAccumulator closed = *this;
    closed.finish_stream();
    const double m = double(pixels_);
    MomentSet out(L_, pixels_);
    out.a1 = closed.s1_.value() / m;
    for (std::size_t l = 0; l < L_; ++l) out.a2[l] = closed.s2_[l].value() / m;
    for (std::size_t l1 = 0; l1 < L_; ++l1)
      for (std::size_t l2 = 0; l2 <= l1; ++l2) {
        const double v = closed.s3_[tri(l1, l2)].value() / m;
        out.at3(l1, l2) = v;
        out.at3(l2, l1) = v;
      }
    return out;
  }

  /// Combines accumulators over disjoint micrographs. Open streams are closed
  /// first, so the result never carries a tail.
  static MomentAccumulator merge(const MomentAccumulator& a, const MomentAccumulator& b) {
    if (a.L_ != b.L_) throw InvalidArgument("merge: accumulators have different L");
    MomentAccumulator x = a, y = b;
    x.finish_stream();
    y.finish_stream();
    MomentAccumulator out(a.L_);
    out.pixels_ = x.pixels_ + y.pixels_;
    out.s1_ = detail::CompensatedSum::combine(x.s1_, y.s1_);
    for (std::size_t k = 0; k < out.s2_.size(); ++k)
      out.s2_[k] = detail::CompensatedSum::combine(x.s2_[k], y.s2_[k]);
    for (std::size_t k = 0; k < out.s3_.size(); ++k)
      out.s3_[k] = detail::CompensatedSum::combine(x.s3_[k], y.s3_[k]);
    return out;
  }

 private:
  static std::size_t tri(std::size_t l1, std::size_t l2) { return l1 * (l1 + 1) / 2 + l2; }

  // Evaluates every start whose window lies inside buf; keeps the rest as tail.
  void consume(std::span<const double> buf) {
    const std::size_t ready = buf.size() >= L_ ? buf.size() - (L_ - 1) : 0;
    if (ready > 0) add_starts(buf, ready);
    tail_.assign(buf.begin() + std::ptrdiff_t(ready), buf.end());
  }

  // Adds the contribution of starts i in [0, n) of buf; samples past the end
  // of buf are zero.
  void add_starts(std::span<const double> buf, std::size_t n) {
    const std::size_t T = buf.size();
    const double* b = buf.data();
    prod_.resize(std::min(n, kBlock));
    for (std::size_t i0 = 0; i0 < n; i0 += kBlock) {
      const std::size_t i1 = std::min(n, i0 + kBlock);
      double s1 = 0.0;
      for (std::size_t i = i0; i < i1; ++i) s1 += b[i];
      s1_.add(s1);
      for (std::size_t l1 = 0; l1 < L_; ++l1) {
        const std::size_t end = std::min(i1, T > l1 ? T - l1 : 0);
        if (end <= i0) continue;
        const std::size_t cnt = end - i0;
        for (std::size_t k = 0; k < cnt; ++k) prod_[k] = b[i0 + k] * b[i0 + k + l1];
        double s2 = 0.0;
        for (std::size_t k = 0; k < cnt; ++k) s2 += prod_[k];
        s2_[l1].add(s2);
        for (std::size_t l2 = 0; l2 <= l1; ++l2)
          s3_[tri(l1, l2)].add(detail::dot(prod_.data(), b + i0 + l2, cnt));
      }
    }
  }

  std::size_t L_ = 0;
  std::uint64_t pixels_ = 0;
  detail::CompensatedSum s1_;
  std::vector<detail::CompensatedSum> s2_;
  std::vector<detail::CompensatedSum> s3_;  // packed lower triangle, l2 <= l1
  std::vector<double> tail_;
  std::vector<double> buf_;
  std::vector<double> prod_;
};

inline MomentAccumulator accumulate_chunk(MomentAccumulator acc, std::span<const double> chunk,
                                          JunctionMode mode = JunctionMode::exact) {
  acc.accumulate(chunk, mode);
  return acc;
}

inline MomentAccumulator merge(const MomentAccumulator& a, const MomentAccumulator& b) {
  return MomentAccumulator::merge(a, b);
}

inline MomentSet finalize(const MomentAccumulator& acc) { return acc.finalize(); }

/// Streams one micrograph through a fresh accumulator in chunks of
/// chunk_size samples.
inline MomentAccumulator accumulate_micrograph(std::span<const double> y, std::size_t L,
                                               std::size_t chunk_size = std::size_t(1) << 24,
                                               JunctionMode mode = JunctionMode::exact) {
  require(chunk_size >= 1, "accumulate_micrograph: chunk size must be positive");
  MomentAccumulator acc(L);
  for (std::size_t off = 0; off < y.size(); off += chunk_size)
    acc.accumulate(y.subspan(off, std::min(chunk_size, y.size() - off)), mode);
  acc.finish_stream();
  return acc;
}

inline MomentSet compute_moments(std::span<const double> y, std::size_t L,
                                 std::size_t chunk_size = std::size_t(1) << 24,
                                 JunctionMode mode = JunctionMode::exact) {
  return accumulate_micrograph(y, L, chunk_size, mode).finalize();
}

// ---------------------------------------------------------------------------
// Forward model

inline double max_density(std::size_t L) { return double(L) / double(2 * L - 1); }

/// Limits of the micrograph moments for density gamma and noise sigma:
///   a1 = gamma a_x1
///   a2[l] = gamma a_x2[l] + sigma^2 delta[l]
///   a3[l1,l2] = gamma a_x3[l1,l2] + sigma^2 gamma a_x1 (delta[l1] + delta[l2] + delta[l1-l2])
inline MomentSet forward_model(const Signal1D& x, double gamma, double sigma) {
  const std::size_t L = x.length();
  require(gamma > 0.0 && gamma <= max_density(L) * (1.0 + 1e-12),
          "forward_model: gamma must lie in (0, L/(2L-1)]");
  require(sigma >= 0.0, "forward_model: sigma must be non-negative");
  MomentSet m = brute_autocorr(x);
  const double s2 = sigma * sigma;
  const double ax1 = m.a1;
  m.a1 = gamma * ax1;
  for (std::size_t l = 0; l < L; ++l) m.a2[l] = gamma * m.a2[l] + (l == 0 ? s2 : 0.0);
  for (std::size_t l1 = 0; l1 < L; ++l1)
    for (std::size_t l2 = 0; l2 < L; ++l2) {
      const int deltas = int(l1 == 0) + int(l2 == 0) + int(l1 == l2);
      m.at3(l1, l2) = gamma * m.at3(l1, l2) + s2 * gamma * ax1 * deltas;
    }
  m.pixel_count = 0;
  return m;
}

/// Removes the noise bias and the density scaling: returns the moments of x
/// implied by (m, gamma, sigma).
inline MomentSet debias(const MomentSet& m, double gamma, double sigma) {
  require(gamma > 0.0, "debias: gamma must be positive");
  const std::size_t L = m.L;
  const double s2 = sigma * sigma;
  MomentSet x(L, m.pixel_count);
  x.a1 = m.a1 / gamma;
  for (std::size_t l = 0; l < L; ++l) x.a2[l] = (m.a2[l] - (l == 0 ? s2 : 0.0)) / gamma;
  for (std::size_t l1 = 0; l1 < L; ++l1)
    for (std::size_t l2 = 0; l2 < L; ++l2) {
      const int deltas = int(l1 == 0) + int(l2 == 0) + int(l1 == l2);
      x.at3(l1, l2) = (m.at3(l1, l2) - s2 * m.a1 * deltas) / gamma;
    }
  return x;
}

}  // namespace nopick
