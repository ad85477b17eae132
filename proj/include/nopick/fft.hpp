#pragma once

// Thin RAII wrapper over FFTW's 2-D real transforms. Transforms are
// unnormalized in both directions (FFTW convention).

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "nopick/core.hpp"

namespace nopick {

namespace detail {
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(p);
  }
};
using PlanPtr = std::unique_ptr<fftw_plan_s, PlanDeleter>;
}  // namespace detail

/// r2c / c2r pair for a rows x cols real grid; the half spectrum has
/// rows x (cols/2 + 1) bins.
class RealFFT2D {
 public:
  RealFFT2D(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), half_(cols / 2 + 1), real_(rows * cols), cplx_(rows * half_) {
    require(rows >= 1 && cols >= 1, "RealFFT2D: empty grid");
    std::lock_guard lock(detail::fftw_planner_mutex());
    auto* c = reinterpret_cast<fftw_complex*>(cplx_.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fwd_.reset(fftw_plan_dft_r2c_2d(int(rows), int(cols), real_.data(), c, flags));
    inv_.reset(fftw_plan_dft_c2r_2d(int(rows), int(cols), c, real_.data(), flags | FFTW_DESTROY_INPUT));
    if (!fwd_ || !inv_) throw std::runtime_error("RealFFT2D: FFTW planning failed");
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t half_cols() const { return half_; }
  std::size_t spectrum_size() const { return rows_ * half_; }

  void forward(std::span<const double> in, std::span<std::complex<double>> out) const {
    require(in.size() == rows_ * cols_ && out.size() == spectrum_size(), "RealFFT2D::forward: size");
    // r2c leaves its input intact; FFTW's signature is not const-qualified.
    fftw_execute_dft_r2c(fwd_.get(), const_cast<double*>(in.data()),
                         reinterpret_cast<fftw_complex*>(out.data()));
  }

  /// Consumes `in` (c2r overwrites its input).
  void inverse(std::span<std::complex<double>> in, std::span<double> out) const {
    require(in.size() == spectrum_size() && out.size() == rows_ * cols_, "RealFFT2D::inverse: size");
    fftw_execute_dft_c2r(inv_.get(), reinterpret_cast<fftw_complex*>(in.data()), out.data());
  }

 private:
  std::size_t rows_, cols_, half_;
  std::vector<double> real_;
  std::vector<std::complex<double>> cplx_;
  detail::PlanPtr fwd_;
  detail::PlanPtr inv_;
};

/// Full complex DFT of a real grid (unnormalized), for tests and callers
/// that need every bin.
inline std::vector<std::complex<double>> dft2_full(const Grid2D& g) {
  const std::size_t R = g.rows(), C = g.cols();
  RealFFT2D fft(R, C);
  std::vector<std::complex<double>> half(fft.spectrum_size());
  fft.forward(g.span(), half);
  std::vector<std::complex<double>> full(R * C);
  const std::size_t H = fft.half_cols();
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c) {
      if (c < H) {
        full[r * C + c] = half[r * H + c];
      } else {
        const std::size_t rr = (R - r) % R, cc = C - c;
        full[r * C + c] = std::conj(half[rr * H + cc]);
      }
    }
  return full;
}

}  // namespace nopick
