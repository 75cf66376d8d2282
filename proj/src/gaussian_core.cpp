#include "vep/gaussian_core.hpp"

#include <cmath>
#include <numbers>

namespace vep {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599343818684759;
constexpr double kLogSqrt2Pi = 0.9189385332046727417803297364056176398614;

// Below this standardized value the lower-tail quantities switch from
// erfc-based evaluation to asymptotic series in u = 1/t^2.
constexpr double kTailSwitch = -30.0;

// t * R(t) where R is the Mills ratio Φ(-t)/φ(t): 1 - u + 3u^2 - 15u^3 + ...
double scaled_mills_series(double u) {
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k <= 9; ++k) {
    term *= -(2.0 * k - 1.0) * u;
    sum += term;
  }
  return sum;
}

double horner(std::initializer_list<double> coeffs, double u) {
  double acc = 0.0;
  for (auto it = std::rbegin(coeffs); it != std::rend(coeffs); ++it) acc = acc * u + *it;
  return acc;
}

}  // namespace

Gaussian1D Gaussian1D::belief(double mean, double variance) {
  if (std::isnan(variance) || !(variance > 0.0)) {
    throw DomainError("belief variance must be positive, got " + std::to_string(variance));
  }
  if (variance != kInf && !std::isfinite(mean)) {
    throw DomainError("belief mean must be finite");
  }
  return {mean, variance};
}

Gaussian1D Gaussian1D::from_natural(double precision, double shift) {
  if (precision == 0.0) {
    if (shift != 0.0) throw DomainError("improper linear factor (zero precision, nonzero shift)");
    return vacuous();
  }
  return {shift / precision, 1.0 / precision};
}

bool Gaussian1D::is_belief() const {
  if (is_vacuous()) return true;
  return variance > 0.0 && std::isfinite(mean);
}

GaussianProduct gaussian_multiply(const Gaussian1D& a, const Gaussian1D& b) {
  if (a.is_vacuous() && b.is_vacuous()) throw DomainError("vacuous product");
  GaussianProduct out;
  out.gaussian = Gaussian1D::from_natural(a.precision() + b.precision(), a.shift() + b.shift());
  if (!a.is_vacuous() && !b.is_vacuous()) {
    const double s = a.variance + b.variance;
    const double d = a.mean - b.mean;
    out.log_scale = -0.5 * std::log(2.0 * std::numbers::pi * std::abs(s)) - 0.5 * d * d / s;
  }
  return out;
}

Gaussian1D gaussian_divide(const Gaussian1D& q, const Gaussian1D& site) {
  if (!(q.variance > 0.0) || q.is_vacuous()) {
    throw DomainError("gaussian_divide needs a finite positive-variance numerator");
  }
  const double q_prec = q.precision();
  const double site_prec = site.is_vacuous() ? 0.0 : site.precision();
  const double prec = q_prec - site_prec;
  if (std::abs(prec) <= kCavitySnapTolerance * q_prec) return Gaussian1D::vacuous();
  if (prec < 0.0) throw NegativeCavityError();
  const double v_cav = 1.0 / prec;
  const double correction = site_prec == 0.0 ? 0.0 : site_prec * v_cav * (q.mean - site.mean);
  return {q.mean + correction, v_cav};
}

double sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

double log_sigmoid(double u) {
  if (u >= 0.0) return -std::log1p(std::exp(-u));
  return u - std::log1p(std::exp(u));
}

double lambda_zeta(double zeta) {
  const double z = std::abs(zeta);
  if (z == 0.0) return 0.125;
  // σ(z) − 1/2 = tanh(z/2)/2 avoids the cancellation near zero.
  return std::tanh(0.5 * z) / (4.0 * z);
}

NormalEval std_normal_pdf_cdf(double x) {
  NormalEval out;
  out.pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
  out.cdf = 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0);
  if (x < kTailSwitch) {
    const double t = -x;
    const double u = 1.0 / (t * t);
    out.log_cdf = -0.5 * x * x - kLogSqrt2Pi - std::log(t) + std::log(scaled_mills_series(u));
  } else if (x <= 0.0) {
    out.log_cdf = std::log(out.cdf);
  } else {
    out.log_cdf = std::log1p(-0.5 * std::erfc(x * std::numbers::sqrt2 / 2.0));
  }
  return out;
}

double inverse_mills(double x) {
  if (x < kTailSwitch) {
    const double t = -x;
    return t / scaled_mills_series(1.0 / (t * t));
  }
  const NormalEval e = std_normal_pdf_cdf(x);
  return e.pdf / e.cdf;
}

TruncationRatios truncation_ratios(double alpha) {
  TruncationRatios r;
  if (alpha < kTailSwitch) {
    const double t = -alpha;
    const double u = 1.0 / (t * t);
    r.gamma = t / scaled_mills_series(u);
    r.mean_excess = horner({1.0, -2.0, 10.0, -74.0, 706.0, -8162.0, 110410.0, -1708394.0}, u) / t;
    r.variance_factor = u * horner({1.0, -6.0, 50.0, -518.0, 6354.0, -89782.0, 1435330.0}, u);
    return r;
  }
  r.gamma = inverse_mills(alpha);
  r.mean_excess = alpha + r.gamma;
  r.variance_factor = std::max(0.0, 1.0 - r.gamma * r.mean_excess);
  return r;
}

RectifiedGaussianParams RectifiedGaussianParams::with_scale(double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw DomainError("rectified Gaussian scale must be positive and finite");
  }
  return {0.0, scale};
}

RectifiedMoments rectified_gaussian_moments(double m, double v) {
  if (!(v > 0.0)) throw DomainError("rectified_gaussian_moments needs v > 0");
  const double s = std::sqrt(v);
  const double alpha = m / s;
  const NormalEval e = std_normal_pdf_cdf(alpha);
  const TruncationRatios r = truncation_ratios(alpha);
  return {e.cdf, e.log_cdf, s * r.mean_excess, v * r.variance_factor};
}

}  // namespace vep
