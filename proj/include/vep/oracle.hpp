#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

#include "vep/random.hpp"

namespace vep {

struct MCEstimate {
  double mean = 0.0;
  double variance = 0.0;  ///< unbiased
  double std_error_mean = 0.0;
  double std_error_var = 0.0;  ///< jackknife
  std::size_t n_samples = 0;
};

using Sampler = std::function<double(Rng&)>;

/// Streaming sample mean and variance of n draws, with jackknife standard
/// errors. Deterministic in (sampler, n, seed). Requires n >= 100.
MCEstimate mc_moments(const Sampler& sampler, std::size_t n, std::uint64_t seed);

class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double achieved)
      : std::runtime_error(what), achieved_(achieved) {}
  [[nodiscard]] double achieved() const { return achieved_; }

 private:
  double achieved_;
};

using Integrand = std::function<double(double)>;

/// Adaptive Gauss-Kronrod integral of f over [lo, hi] with estimated absolute
/// error <= tol. Infinite limits are allowed. Throws QuadratureError with the
/// achieved error estimate when the target is not met.
double quad_integrate(const Integrand& f, double lo, double hi, double tol);

/// log ∫ exp(log_f(x)) dx, with the integrand rescaled by its maximum on a
/// grid. tol is relative to the integral. Limits must be finite.
double quad_integrate_log(const Integrand& log_f, double lo, double hi, double tol);

/// Nested 2-D integral over a rectangle (limits may be infinite); tol is
/// relative to the integral of |f|.
double quad_integrate_2d(const std::function<double(double, double)>& f, double x_lo, double x_hi,
                         double y_lo, double y_hi, double tol);

/// Default limits for Gaussian-weighted integrands: mean ± 10 sd.
std::pair<double, double> gaussian_bounds(double mean, double variance);

/// Central differences with step h_i = rel_step * max(1, |x_i|).
Eigen::VectorXd finite_diff_grad(const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& x, double rel_step);

/// Scalar convenience wrapper of finite_diff_grad.
double finite_diff(const std::function<double(double)>& f, double x, double rel_step);

/// Maximizer of a unimodal f on [lo, hi] (Brent's method); returns (x, f(x)).
std::pair<double, double> maximize_1d(const std::function<double(double)>& f, double lo, double hi);

}  // namespace vep
