#pragma once

// Core value types shared by every module: signals, images, dense grids,
// error types and seed derivation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nopick {

#ifdef NOPICK_VERSION
inline constexpr const char* kVersion = NOPICK_VERSION;
#else
inline constexpr const char* kVersion = "0.1.0";
#endif

// ---------------------------------------------------------------------------
// Errors

struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Raised when an estimator's hypothesis fails numerically (a vanishing
/// denominator, no admissible root, zero-norm reference).
struct DegenerateInput : std::domain_error {
  using std::domain_error::domain_error;
};

struct EmptyAccumulator : std::logic_error {
  using std::logic_error::logic_error;
};

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidArgument(what);
}

// ---------------------------------------------------------------------------
// Signal1D

class Signal1D {
 public:
  Signal1D() = default;
  explicit Signal1D(std::vector<double> samples) : samples_(std::move(samples)) {
    require(!samples_.empty(), "Signal1D: length must be at least 1");
    for (double v : samples_) require(std::isfinite(v), "Signal1D: samples must be finite");
  }

  std::size_t length() const { return samples_.size(); }
  double operator[](std::size_t i) const { return samples_[i]; }
  std::span<const double> samples() const { return samples_; }
  const std::vector<double>& vec() const { return samples_; }

  double squared_norm() const {
    double s = 0.0;
    for (double v : samples_) s += v * v;
    return s;
  }

  friend bool operator==(const Signal1D&, const Signal1D&) = default;

 private:
  std::vector<double> samples_;
};

// ---------------------------------------------------------------------------
// Grid2D: dense row-major real matrix. Image2D is the square case.

class Grid2D {
 public:
  Grid2D() = default;
  Grid2D(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Grid2D(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    require(data_.size() == rows_ * cols_, "Grid2D: data size does not match extents");
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> span() { return data_; }
  std::span<const double> span() const { return data_; }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double squared_norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return s;
  }

  friend bool operator==(const Grid2D&, const Grid2D&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

class Image2D {
 public:
  Image2D() = default;
  explicit Image2D(Grid2D pixels) : pixels_(std::move(pixels)) {
    require(pixels_.rows() == pixels_.cols() && pixels_.rows() >= 1,
            "Image2D: pixels must form a non-empty square");
    for (double v : pixels_.vec()) require(std::isfinite(v), "Image2D: pixels must be finite");
  }

  std::size_t L() const { return pixels_.rows(); }
  double operator()(std::size_t r, std::size_t c) const { return pixels_(r, c); }
  const Grid2D& pixels() const { return pixels_; }
  double squared_norm() const { return pixels_.squared_norm(); }

  friend bool operator==(const Image2D&, const Image2D&) = default;

 private:
  Grid2D pixels_;
};

// ---------------------------------------------------------------------------
// Seeds

/// splitmix64 finalizer; used to derive independent stream seeds from one
/// user seed so that every random stream in a run is reproducible.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix_seed(mix_seed(seed) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

}  // namespace nopick
