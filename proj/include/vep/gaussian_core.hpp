#pragma once

#include <limits>
#include <stdexcept>
#include <string>

namespace vep {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Raised when an operation leaves its mathematical domain (non-positive
/// variance where one is required, vacuous products, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised by gaussian_divide when the quotient has non-positive precision.
class NegativeCavityError : public DomainError {
 public:
  NegativeCavityError() : DomainError("negative cavity variance") {}
};

/// Scalar Gaussian N(mean, variance).
///
/// variance == +inf encodes the vacuous (flat) factor; its mean is 0 by
/// convention. Beliefs must have variance > 0; site factors produced by
/// division may also carry a negative variance.
struct Gaussian1D {
  double mean = 0.0;
  double variance = kInf;

  /// Checked constructor for beliefs: finite mean, variance > 0 or +inf.
  static Gaussian1D belief(double mean, double variance);
  static Gaussian1D vacuous() { return {}; }
  /// Builds from (precision, precision * mean). precision == 0 with a
  /// zero shift gives the vacuous factor.
  static Gaussian1D from_natural(double precision, double shift);

  [[nodiscard]] bool is_vacuous() const { return variance == kInf; }
  [[nodiscard]] bool is_belief() const;
  [[nodiscard]] double precision() const { return 1.0 / variance; }
  [[nodiscard]] double shift() const { return is_vacuous() ? 0.0 : mean / variance; }
};

struct GaussianProduct {
  Gaussian1D gaussian;
  /// log of the normalizer ∫ N(x|a) N(x|b) dx; 0 when either factor is vacuous.
  double log_scale = 0.0;
};

/// Product of two Gaussian factors: precisions add, shifts add.
GaussianProduct gaussian_multiply(const Gaussian1D& a, const Gaussian1D& b);

/// Quotient q / site, with the mean written as m + site_prec * v_cav * (m - m_site).
/// Throws NegativeCavityError when the resulting precision is negative; a
/// precision within round-off of zero yields the vacuous factor.
Gaussian1D gaussian_divide(const Gaussian1D& q, const Gaussian1D& site);

/// Relative tolerance below which a quotient precision counts as exactly zero.
inline constexpr double kCavitySnapTolerance = 1e-12;

double sigmoid(double u);
double log_sigmoid(double u);

/// λ(ζ) = (σ(ζ) − 1/2) / (2ζ), with the limit 1/8 at ζ = 0. Even in ζ.
double lambda_zeta(double zeta);

struct NormalEval {
  double pdf = 0.0;
  double cdf = 0.0;
  double log_cdf = 0.0;
};

/// Standard normal φ(x), Φ(x) and log Φ(x); log Φ stays accurate far in the
/// lower tail where Φ underflows.
NormalEval std_normal_pdf_cdf(double x);

/// Inverse Mills ratio φ(x)/Φ(x), accurate for any x.
double inverse_mills(double x);

/// Ratio quantities of a standard normal truncated to [-alpha, inf), i.e. the
/// shape of max-style moments for a Gaussian with standardized mean alpha.
struct TruncationRatios {
  double gamma = 0.0;            ///< φ(α)/Φ(α)
  double mean_excess = 0.0;      ///< α + γ
  double variance_factor = 1.0;  ///< 1 − γ(α + γ)
};
TruncationRatios truncation_ratios(double alpha);

struct RectifiedGaussianParams {
  double location = 0.0;
  double scale = 1.0;

  static RectifiedGaussianParams with_scale(double scale);
};

struct RectifiedMoments {
  double z = 0.0;      ///< mass of N(m, v) on [0, inf)
  double log_z = 0.0;
  double mean = 0.0;
  double variance = 0.0;
};

/// Moments of N(m, v) truncated to [0, inf) and renormalized.
RectifiedMoments rectified_gaussian_moments(double m, double v);

}  // namespace vep
