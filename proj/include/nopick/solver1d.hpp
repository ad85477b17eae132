#pragma once

// Joint recovery of a 1-D signal and its density by weighted nonlinear least
// squares on the unbiased moment entries:
//
//   w1 (a1 - g m1(x))^2 + w2 sum_l (a2[l] - g m2(x)[l])^2
//                       + w3 sum_{l1,l2} (a3[l1,l2] - g m3(x)[l1,l2])^2
//
// over l in [1, L-1] and 2 <= l1 <= L-1, 1 <= l2 < l1, so sigma never enters.
// Model moments of a candidate x of length W >= L are taken at shifts
// [0, L-1] and normalized by L (not W), which makes g directly comparable
// between the W = 2L-1 and W = L stages.
//
// The minimizer is Levenberg-Marquardt on (x, u) with g = exp(u).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "nopick/core.hpp"
#include "nopick/moments.hpp"

namespace nopick {

struct LSWeights {
  double w1 = 0.5;
  double w2 = 0.0;
  double w3 = 0.0;

  /// w1 = 1/2, w2 = 1/(2 n2), w3 = 1/(2 n3) with n2 = L-1, n3 = (L-1)(L-2)/2.
  static LSWeights defaults(std::size_t L) {
    LSWeights w;
    const double n2 = double(L - 1);
    const double n3 = double((L - 1) * (L - 2)) / 2.0;
    w.w2 = n2 > 0 ? 1.0 / (2.0 * n2) : 0.0;
    w.w3 = n3 > 0 ? 1.0 / (2.0 * n3) : 0.0;
    return w;
  }
};

struct LSConfig {
  std::size_t L = 0;
  std::size_t W = 0;  // 0: L
  LSWeights weights;
  double grad_tol = 1e-10;  // relative to the initial cost
  std::size_t max_iters = 500;
  std::size_t restarts = 10;
  std::uint64_t seed = 0;

  static LSConfig defaults(std::size_t L) {
    LSConfig c;
    c.L = L;
    c.weights = LSWeights::defaults(L);
    return c;
  }
};

// ---------------------------------------------------------------------------
// Residual model

/// Weighted residuals r = sqrt(w) (data - g m(x)) and their Jacobian with
/// respect to (x_0..x_{W-1}, g).
class MomentFit {
 public:
  MomentFit(const MomentSet& data, const LSWeights& w) : L_(data.L), a3_idx_(unbiased_a3_entries(data.L)) {
    require(data.L >= 3, "MomentFit: L must be at least 3");
    obs_.reserve(residual_count());
    sw_.reserve(residual_count());
    obs_.push_back(data.a1);
    sw_.push_back(std::sqrt(w.w1));
    for (std::size_t l = 1; l < L_; ++l) {
      obs_.push_back(data.a2[l]);
      sw_.push_back(std::sqrt(w.w2));
    }
    for (auto [l1, l2] : a3_idx_) {
      obs_.push_back(data.at3(l1, l2));
      sw_.push_back(std::sqrt(w.w3));
    }
  }

  std::size_t L() const { return L_; }
  std::size_t residual_count() const { return 1 + (L_ - 1) + a3_idx_.size(); }

  /// Model moments g-free: m1, m2[1..L-1], m3 over the unbiased index set.
  void model(std::span<const double> x, Eigen::VectorXd& m) const {
    const std::size_t W = x.size();
    const double inv = 1.0 / double(L_);
    auto at = [&](std::ptrdiff_t i) { return (i >= 0 && std::size_t(i) < W) ? x[std::size_t(i)] : 0.0; };
    m.resize(Eigen::Index(residual_count()));
    Eigen::Index k = 0;
    double s = 0.0;
    for (double v : x) s += v;
    m[k++] = s * inv;
    for (std::size_t l = 1; l < L_; ++l) {
      double t = 0.0;
      for (std::size_t i = 0; i + l < W; ++i) t += x[i] * x[i + l];
      m[k++] = t * inv;
    }
    for (auto [l1, l2] : a3_idx_) {
      double t = 0.0;
      for (std::size_t i = 0; i + l1 < W; ++i) t += x[i] * x[i + l1] * at(std::ptrdiff_t(i + l2));
      m[k++] = t * inv;
    }
  }

  /// Fills r (weighted residuals) and, if J is non-null, d r / d(x, g).
  double evaluate(std::span<const double> x, double g, Eigen::VectorXd& r, Eigen::MatrixXd* J) const {
    const std::size_t W = x.size();
    Eigen::VectorXd m;
    model(x, m);
    const Eigen::Index n = Eigen::Index(residual_count());
    r.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) r[k] = sw_[std::size_t(k)] * (obs_[std::size_t(k)] - g * m[k]);
    if (J) {
      const double inv = 1.0 / double(L_);
      auto at = [&](std::ptrdiff_t i) {
        return (i >= 0 && std::size_t(i) < W) ? x[std::size_t(i)] : 0.0;
      };
      J->setZero(n, Eigen::Index(W + 1));
      Eigen::Index k = 0;
      for (std::size_t j = 0; j < W; ++j) (*J)(k, Eigen::Index(j)) = -sw_[0] * g * inv;
      (*J)(k, Eigen::Index(W)) = -sw_[0] * m[k];
      ++k;
      for (std::size_t l = 1; l < L_; ++l, ++k) {
        const double c = -sw_[std::size_t(k)] * g * inv;
        for (std::size_t j = 0; j < W; ++j) {
          const auto jj = std::ptrdiff_t(j), ll = std::ptrdiff_t(l);
          (*J)(k, Eigen::Index(j)) = c * (at(jj + ll) + at(jj - ll));
        }
        (*J)(k, Eigen::Index(W)) = -sw_[std::size_t(k)] * m[k];
      }
      for (auto [l1u, l2u] : a3_idx_) {
        const auto l1 = std::ptrdiff_t(l1u), l2 = std::ptrdiff_t(l2u);
        const double c = -sw_[std::size_t(k)] * g * inv;
        for (std::size_t j = 0; j < W; ++j) {
          const auto jj = std::ptrdiff_t(j);
          const double d = at(jj + l1) * at(jj + l2) + at(jj - l1) * at(jj - l1 + l2) +
                           at(jj - l2) * at(jj - l2 + l1);
          (*J)(k, Eigen::Index(j)) = c * d;
        }
        (*J)(k, Eigen::Index(W)) = -sw_[std::size_t(k)] * m[k];
        ++k;
      }
    }
    return r.squaredNorm();
  }

 private:
  std::size_t L_;
  std::vector<std::pair<std::size_t, std::size_t>> a3_idx_;
  std::vector<double> obs_;
  std::vector<double> sw_;
};

struct CostGradient {
  double cost = 0.0;
  std::vector<double> grad_x;
  double grad_gamma = 0.0;
};

/// Least-squares cost and its exact gradient with respect to (x_hat, gamma_hat).
inline CostGradient ls_cost(std::span<const double> x_hat, double gamma_hat, const MomentSet& data,
                            const LSWeights& weights) {
  if (x_hat.size() < data.L) throw InvalidArgument("ls_cost: W must be at least L");
  MomentFit fit(data, weights);
  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  CostGradient out;
  out.cost = fit.evaluate(x_hat, gamma_hat, r, &J);
  const Eigen::VectorXd g = 2.0 * J.transpose() * r;
  out.grad_x.assign(g.data(), g.data() + x_hat.size());
  out.grad_gamma = g[Eigen::Index(x_hat.size())];
  return out;
}

inline CostGradient ls_cost(std::span<const double> x_hat, double gamma_hat, const MomentSet& data) {
  return ls_cost(x_hat, gamma_hat, data, LSWeights::defaults(data.L));
}

// ---------------------------------------------------------------------------
// Local minimization

struct LocalSolution {
  std::vector<double> x;
  double gamma = 0.0;
  double cost = 0.0;
  double grad_norm = 0.0;  // |grad| with respect to (x, gamma)
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> cost_history;  // cost at every accepted iterate
};

/// Levenberg-Marquardt from (x0, gamma0). Only cost-decreasing steps are
/// accepted.
inline LocalSolution minimize_ls(const MomentSet& data, std::vector<double> x0, double gamma0,
                                 const LSConfig& cfg) {
  require(x0.size() >= data.L, "minimize_ls: W must be at least L");
  require(gamma0 > 0.0, "minimize_ls: initial gamma must be positive");
  const MomentFit fit(data, cfg.weights);
  const std::size_t W = x0.size();
  const Eigen::Index P = Eigen::Index(W + 1);
  constexpr double kUMin = -27.6;  // log(1e-12)
  constexpr double kUMax = 6.9;    // log(1e3)

  std::vector<double> x = std::move(x0);
  double u = std::clamp(std::log(gamma0), kUMin, kUMax);

  Eigen::VectorXd r, r_try;
  Eigen::MatrixXd J;
  double cost = fit.evaluate(x, std::exp(u), r, &J);
  const double tol = cfg.grad_tol * std::max(cost, std::numeric_limits<double>::min());

  LocalSolution out;
  out.cost_history.push_back(cost);

  // Gradient in (x, u): the last Jacobian column is scaled by dg/du = g.
  auto theta_jacobian = [&](Eigen::MatrixXd& Jt, double g) {
    Jt = J;
    Jt.col(P - 1) *= g;
  };

  Eigen::MatrixXd Jt;
  theta_jacobian(Jt, std::exp(u));
  Eigen::VectorXd grad = Jt.transpose() * r;  // half-gradient of the cost
  Eigen::MatrixXd H = Jt.transpose() * Jt;
  double lambda = 1e-3 * std::max(H.diagonal().maxCoeff(), 1e-300);
  double nu = 2.0;
  std::size_t it = 0;
  std::vector<double> x_try(W);

  for (; it < cfg.max_iters; ++it) {
    if (2.0 * grad.norm() <= tol || cost == 0.0) {
      out.converged = true;
      break;
    }
    Eigen::MatrixXd A = H;
    for (Eigen::Index i = 0; i < P; ++i) A(i, i) += lambda * std::max(H(i, i), 1e-12 * H.diagonal().maxCoeff() + 1e-300);
    const Eigen::VectorXd step = A.ldlt().solve(-grad);
    if (!step.allFinite()) {
      lambda *= nu;
      nu *= 2.0;
      continue;
    }
    for (std::size_t j = 0; j < W; ++j) x_try[j] = x[j] + step[Eigen::Index(j)];
    const double u_try = std::clamp(u + step[P - 1], kUMin, kUMax);
    const double cost_try = fit.evaluate(x_try, std::exp(u_try), r_try, nullptr);
    const double predicted = -(step.dot(grad) * 2.0 + step.dot(H * step));
    if (std::isfinite(cost_try) && cost_try < cost) {
      const double rho = predicted > 0 ? (cost - cost_try) / predicted : 1.0;
      const double rel_change = (cost - cost_try) / cost;
      x.swap(x_try);
      u = u_try;
      cost = fit.evaluate(x, std::exp(u), r, &J);
      out.cost_history.push_back(cost);
      theta_jacobian(Jt, std::exp(u));
      grad = Jt.transpose() * r;
      H = Jt.transpose() * Jt;
      lambda *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
      nu = 2.0;
      if (rel_change < 1e-15 && step.norm() < 1e-14 * (1.0 + Eigen::Map<const Eigen::VectorXd>(x.data(), Eigen::Index(W)).norm())) {
        out.converged = 2.0 * grad.norm() <= tol;
        ++it;
        break;
      }
    } else {
      lambda *= nu;
      nu *= 2.0;
      if (lambda > 1e300) break;
    }
  }

  out.x = std::move(x);
  out.gamma = std::exp(u);
  out.cost = cost;
  {
    Eigen::VectorXd g = 2.0 * J.transpose() * r;
    out.grad_norm = g.norm();
  }
  out.iterations = it;
  if (!out.converged) out.converged = 2.0 * grad.norm() <= tol || cost == 0.0;
  return out;
}

// ---------------------------------------------------------------------------

/// Contiguous length-L window of x_hat with the largest l2 norm; ties go to
/// the smallest start.
inline Signal1D extract_best_window(std::span<const double> x_hat, std::size_t L) {
  require(L >= 1 && x_hat.size() >= L, "extract_best_window: input shorter than L");
  std::size_t best = 0;
  double best_e = -1.0;
  for (std::size_t s = 0; s + L <= x_hat.size(); ++s) {
    double e = 0.0;
    for (std::size_t i = 0; i < L; ++i) e += x_hat[s + i] * x_hat[s + i];
    if (e > best_e) {
      best_e = e;
      best = s;
    }
  }
  return Signal1D(std::vector<double>(x_hat.begin() + std::ptrdiff_t(best),
                                      x_hat.begin() + std::ptrdiff_t(best + L)));
}

struct RestartRecord {
  std::size_t index = 0;
  double cost = 0.0;
  double gamma = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

struct LSSolution {
  Signal1D x_hat;
  double gamma_hat = 0.0;
  double cost = 0.0;
  double grad_norm = 0.0;
  std::size_t iterations = 0;  // stage 2
  bool converged = false;
  std::size_t best_restart = 0;
  std::vector<RestartRecord> restarts;  // stage 1
  std::vector<double> cost_history;     // stage 2
};

namespace detail {
inline std::vector<double> scaled_start(const MomentSet& data, const MomentFit& fit, std::size_t W,
                                        double gamma0, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::vector<double> x(W);
  for (double& v : x) v = normal(rng);
  // Match the energy of the unbiased second-order entries.
  double e_data = 0.0;
  for (std::size_t l = 1; l < data.L; ++l) e_data += data.a2[l] * data.a2[l];
  Eigen::VectorXd m;
  fit.model(x, m);
  const double e_model = gamma0 * gamma0 * m.segment(1, Eigen::Index(data.L - 1)).squaredNorm();
  const double c = (e_model > 0.0) ? std::pow(e_data / e_model, 0.25) : 0.0;
  for (double& v : x) v *= c;
  return x;
}
}  // namespace detail

/// Two-stage recovery: best of `restarts` random starts at W = 2L-1, then the
/// highest-energy length-L window refined at W = L.
inline LSSolution recover1d(const MomentSet& data, const LSConfig& cfg_in) {
  require(data.L >= 3, "recover1d: L must be at least 3");
  LSConfig cfg = cfg_in;
  cfg.L = data.L;
  if (cfg.weights.w2 == 0.0 && cfg.weights.w3 == 0.0) cfg.weights = LSWeights::defaults(data.L);
  const std::size_t L = data.L;
  const std::size_t W1 = 2 * L - 1;
  const double gamma0 = 0.5 * max_density(L);
  const MomentFit fit(data, cfg.weights);

  LSSolution out;
  LocalSolution best;
  best.cost = std::numeric_limits<double>::infinity();
  const std::size_t restarts = std::max<std::size_t>(1, cfg.restarts);
  for (std::size_t k = 0; k < restarts; ++k) {
    std::mt19937_64 rng(derive_seed(cfg.seed, k));
    auto x0 = detail::scaled_start(data, fit, W1, gamma0, rng);
    LocalSolution s = minimize_ls(data, std::move(x0), gamma0, cfg);
    out.restarts.push_back({k, s.cost, s.gamma, s.iterations, s.converged});
    if (s.cost < best.cost) {
      best = std::move(s);
      out.best_restart = k;
    }
  }

  const Signal1D window = extract_best_window(best.x, L);
  LocalSolution fine = minimize_ls(data, window.vec(), best.gamma, cfg);
  out.x_hat = Signal1D(fine.x);
  out.gamma_hat = fine.gamma;
  out.cost = fine.cost;
  out.grad_norm = fine.grad_norm;
  out.iterations = fine.iterations;
  out.converged = fine.converged;
  out.cost_history = std::move(fine.cost_history);
  return out;
}

}  // namespace nopick
