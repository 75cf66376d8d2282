#pragma once

#include "vep/gaussian_core.hpp"

namespace vep {

/// Which form of the bounded logistic likelihood site to use.
///
/// verified: the exact quadratic-exponential site from completing the square
/// of the bound; closed-form log Z and gradients.
/// paper_literal: the direct m_y / v_y normalizer and its gradient formulas,
/// taken literally. Note v_y < 0 for every ζ > 0, so this mode is kept for fidelity
/// comparisons only.
enum class LikelihoodMode { verified, paper_literal };

/// Labels are {0, 1}.
using Label = int;

/// Gaussian site in a_L obtained from the bound
///   σ(ζ) exp{y a − (a + ζ)/2 − λ(ζ)(a² − ζ²)}
/// = exp{log_scale + (y − ½) a − λ(ζ) a²}.
struct JJSite {
  double zeta = 0.0;
  double nat_precision = 0.25;           ///< 2 λ(ζ)
  double nat_mean_times_precision = 0.5;  ///< y − ½
  double log_scale = 0.0;                ///< log σ(ζ) − ζ/2 + λ(ζ) ζ²

  /// log of the site at a.
  [[nodiscard]] double log_value(double a) const;
};

/// log of the bound on p(y | a) at variational parameter ζ.
double jj_bound_log(double a, double zeta, Label y);

/// Exact log Bernoulli-sigmoid likelihood, log σ((2y − 1) a).
double exact_log_likelihood(double a, Label y);

JJSite jj_site_from_bound(Label y, double zeta);

/// The literal normalizer parameters: m_y = ½ − m_a / v_a,
/// v_y = (½ − σ(ζ))/ζ − 1/v_a (written as −2λ(ζ) − 1/v_a so ζ = 0 is defined).
struct LiteralNormalizer {
  double m_y = 0.0;
  double v_y = 0.0;
};
LiteralNormalizer literal_normalizer(double m_a, double v_a, double zeta);

/// log Z_y = log ∫ h(y | a, ζ) N(a | m_a, v_a) da.
/// paper_literal evaluates log N(y | m_y, v_y) formally, using
/// |v_y| inside the logarithm because v_y is negative.
double log_Zy(double m_a, double v_a, Label y, double zeta, LikelihoodMode mode);

struct LogZGradient {
  double d_m = 0.0;
  double d_v = 0.0;
};

/// ∂ log Z_y / ∂m_a and ∂ log Z_y / ∂v_a. paper_literal returns the literal
/// gradient expressions, which are not derivatives of its log Z.
LogZGradient grad_log_Zy(double m_a, double v_a, Label y, double zeta, LikelihoodMode mode);

struct OutputUpdate {
  double mean = 0.0;
  double variance = 0.0;
  bool skipped = false;  ///< the literal variance update came out non-positive
};

/// The literal direct update of q(a_L):
///   m_new = m_old + (m_y − y) / v_y
///   v_new = v_old + [2 m_old (y − m_y) − 1] / v_y
/// When v_new ≤ 0 the old moments are returned with skipped = true.
OutputUpdate update_q_aL_paper(double m_old, double v_old, Label y, double m_y, double v_y);

/// ζ = sqrt(m_a² + v_a), the maximizer of E_q[log bound] over ζ.
double update_zeta(double m_a, double v_a);

}  // namespace vep
