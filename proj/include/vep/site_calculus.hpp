#pragma once

#include <optional>

#include "vep/gaussian_core.hpp"

namespace vep {

/// An unnormalized Gaussian site factor, stored in natural parameters so that
/// vacuous (zero precision) and negative-variance sites are exact.
struct SiteState {
  double precision = 0.0;  ///< 1 / ṽ
  double shift = 0.0;      ///< m̃ / ṽ
  double log_scale = 0.0;

  static SiteState vacuous() { return {}; }
  static SiteState from_moments(double m_tilde, double v_tilde, double log_scale = 0.0);
  static SiteState from_gaussian(const Gaussian1D& g, double log_scale = 0.0);

  [[nodiscard]] bool is_vacuous() const { return precision == 0.0 && shift == 0.0; }
  [[nodiscard]] double m_tilde() const { return precision == 0.0 ? 0.0 : shift / precision; }
  [[nodiscard]] double v_tilde() const { return precision == 0.0 ? kInf : 1.0 / precision; }
  /// The factor as a Gaussian1D (variance may be negative or +inf).
  [[nodiscard]] Gaussian1D as_factor() const;
};

/// Marginals of one weight and its precision.
struct ParamMarginals {
  Gaussian1D q_w;
  Gaussian1D q_tau;
};

/// How E[τ] is taken from the Gaussian parameters of q(τ).
enum class TauExpectation {
  clamped_mean,    ///< max(m_tau, kTauFloor)
  truncated_mean,  ///< mean of N(m_tau, v_tau) restricted to τ ≥ 0
};

inline constexpr double kTauFloor = 1e-8;

struct TauSiteInit {
  SiteState site;
  Gaussian1D marginal;
};

/// First incorporation of a precision prior: site (0, v0) and q(τ) = N(0, v0).
TauSiteInit init_tau_site(double v0);

/// marginal / site. std::nullopt signals a negative cavity (skip the update).
std::optional<Gaussian1D> compute_cavity(const Gaussian1D& marginal, const SiteState& site);

/// Optimal Gaussian factor for q(τ) given the τ-cavity and q(w):
///   v_tau = (1/v0 + 1/v_cav)^-1
///   m_tau = [m_cav − ½ v_cav E[w²]] · v0 / (v_cav + v0)
/// A vacuous cavity takes the v_cav → inf limit.
Gaussian1D update_q_tau(const Gaussian1D& cavity_tau, const Gaussian1D& q_w, double v0);

/// E[τ] under q(τ) for the chosen mode, floored at kTauFloor.
double tau_expectation(const Gaussian1D& q_tau, TauExpectation mode);

/// q(w) ∝ exp(−½ E[τ] w²) · cavity(w).
Gaussian1D update_q_w(const Gaussian1D& cavity_w, double e_tau);

/// New site = q_new / cavity. Negative or infinite ṽ are legal results.
SiteState refresh_site(const Gaussian1D& q_new, const Gaussian1D& cavity);

/// Blend of natural parameters: delta * fresh + (1 − delta) * old.
SiteState damp_site(const SiteState& old_site, const SiteState& fresh, double delta);

/// cavity × site, as a belief. Throws DomainError when the product is improper.
Gaussian1D attach_site(const Gaussian1D& cavity, const SiteState& site);

/// Moment matching from the gradients of log Z with respect to the cavity
/// mean and variance. std::nullopt when the new variance is not positive.
std::optional<Gaussian1D> moment_match_from_logZ(const Gaussian1D& cavity, double dlogz_dm,
                                                 double dlogz_dv);

/// Variational lower bound on log Z_w for one (w, τ) prior site, evaluated
/// with q(w, τ) = q(w) q(τ), where q(τ) is the Gaussian restricted to τ ≥ 0
/// and the hyperprior is the rectified N(0, v0). The prior factor enters
/// through its w-dependent part exp(−½ τ w²), the part the q(τ)/q(w) updates
/// maximize. Vacuous cavities contribute nothing.
double site_elbo(const Gaussian1D& q_w, const Gaussian1D& q_tau, const Gaussian1D& cavity_w,
                 const Gaussian1D& cavity_tau, double v0);

}  // namespace vep
