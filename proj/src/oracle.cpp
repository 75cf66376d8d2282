#include "vep/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

namespace vep {

namespace {

constexpr unsigned kMaxDepth = 15;

using GK = boost::math::quadrature::gauss_kronrod<double, 61>;

}  // namespace

MCEstimate mc_moments(const Sampler& sampler, std::size_t n, std::uint64_t seed) {
  if (n < 100) throw std::invalid_argument("mc_moments needs n >= 100");
  Rng rng(seed);
  double mean = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = sampler(rng);
    if (!std::isfinite(x)) throw std::runtime_error("mc_moments: sampler returned a non-finite value");
    const double n1 = static_cast<double>(i);
    const double k = n1 + 1.0;
    const double delta = x - mean;
    const double dn = delta / k;
    const double dn2 = dn * dn;
    const double term1 = delta * dn * n1;
    mean += dn;
    m4 += term1 * dn2 * (k * k - 3.0 * k + 3.0) + 6.0 * dn2 * m2 - 4.0 * dn * m3;
    m3 += term1 * dn * (k - 2.0) - 3.0 * dn * m2;
    m2 += term1;
  }
  const double nn = static_cast<double>(n);
  MCEstimate est;
  est.n_samples = n;
  est.mean = mean;
  est.variance = m2 / (nn - 1.0);
  est.std_error_mean = std::sqrt(est.variance / nn);
  // Leave-one-out unbiased variances differ from their mean by −B (d_i² − m2).
  const double c2 = m2 / nn;
  const double c4 = m4 / nn;
  const double b = nn / ((nn - 1.0) * (nn - 2.0));
  const double jack = (nn - 1.0) / nn * b * b * nn * std::max(c4 - c2 * c2, 0.0);
  est.std_error_var = std::sqrt(jack);
  return est;
}

double quad_integrate(const Integrand& f, double lo, double hi, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("quad_integrate needs tol > 0");
  if (lo == hi) return 0.0;
  double err = 0.0;
  double l1 = 0.0;
  double value = GK::integrate(f, lo, hi, kMaxDepth, tol, &err, &l1);
  if (!std::isfinite(value)) throw QuadratureError("quad_integrate: non-finite integrand", err);
  if (err > tol && l1 > 0.0) {
    value = GK::integrate(f, lo, hi, kMaxDepth, tol / l1, &err, &l1);
  }
  if (!(err <= tol)) {
    throw QuadratureError("quad_integrate: achieved error " + std::to_string(err) + " exceeds " +
                              std::to_string(tol),
                          err);
  }
  return value;
}

double quad_integrate_log(const Integrand& log_f, double lo, double hi, double tol) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    throw std::invalid_argument("quad_integrate_log needs finite limits");
  }
  constexpr int kGrid = 400;
  double shift = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= kGrid; ++i) {
    shift = std::max(shift, log_f(lo + (hi - lo) * i / kGrid));
  }
  if (!std::isfinite(shift)) throw QuadratureError("quad_integrate_log: integrand vanishes", 0.0);
  double err = 0.0;
  double l1 = 0.0;
  const auto g = [&](double x) { return std::exp(log_f(x) - shift); };
  const double value = GK::integrate(g, lo, hi, kMaxDepth, tol, &err, &l1);
  if (!(value > 0.0) || !(err <= tol * value)) {
    throw QuadratureError("quad_integrate_log: relative error target not met", err / value);
  }
  return shift + std::log(value);
}

double quad_integrate_2d(const std::function<double(double, double)>& f, double x_lo, double x_hi,
                         double y_lo, double y_hi, double tol) {
  double worst = 0.0;
  const auto inner = [&](double x) {
    double err = 0.0;
    double l1 = 0.0;
    const double v = GK::integrate([&](double y) { return f(x, y); }, y_lo, y_hi, kMaxDepth,
                                   0.1 * tol, &err, &l1);
    if (l1 > 0.0) worst = std::max(worst, err / l1);
    return v;
  };
  double err = 0.0;
  double l1 = 0.0;
  const double value = GK::integrate(inner, x_lo, x_hi, kMaxDepth, tol, &err, &l1);
  const double achieved = std::max(worst, l1 > 0.0 ? err / l1 : 0.0);
  if (!std::isfinite(value) || achieved > tol) {
    throw QuadratureError("quad_integrate_2d: relative error target not met", achieved);
  }
  return value;
}

std::pair<double, double> gaussian_bounds(double mean, double variance) {
  const double sd = std::sqrt(variance);
  return {mean - 10.0 * sd, mean + 10.0 * sd};
}

Eigen::VectorXd finite_diff_grad(const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& x, double rel_step) {
  Eigen::VectorXd grad(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = rel_step * std::max(1.0, std::abs(x(i)));
    probe(i) = x(i) + h;
    const double up = f(probe);
    probe(i) = x(i) - h;
    const double down = f(probe);
    probe(i) = x(i);
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw std::runtime_error("finite_diff_grad: non-finite evaluation at coordinate " +
                               std::to_string(i));
    }
    grad(i) = (up - down) / (2.0 * h);
  }
  return grad;
}

double finite_diff(const std::function<double(double)>& f, double x, double rel_step) {
  Eigen::VectorXd p(1);
  p(0) = x;
  return finite_diff_grad([&](const Eigen::VectorXd& v) { return f(v(0)); }, p, rel_step)(0);
}

std::pair<double, double> maximize_1d(const std::function<double(double)>& f, double lo, double hi) {
  const auto r = boost::math::tools::brent_find_minima([&](double x) { return -f(x); }, lo, hi,
                                                       std::numeric_limits<double>::digits / 2);
  return {r.first, -r.second};
}

}  // namespace vep
