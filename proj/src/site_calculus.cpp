#include "vep/site_calculus.hpp"

#include <cmath>
#include <numbers>

namespace vep {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112352797228;

void require_v0(double v0) {
  if (std::isnan(v0) || !(v0 > 0.0)) throw std::invalid_argument("v0 must be positive");
}

// E_q[log N(x | cavity)] for a Gaussian-restricted q with the given moments.
double expected_log_cavity(const Gaussian1D& cavity, double q_mean, double q_var) {
  if (cavity.is_vacuous()) return 0.0;
  const double d = q_mean - cavity.mean;
  return -0.5 * (kLog2Pi + std::log(cavity.variance)) - 0.5 * (q_var + d * d) / cavity.variance;
}

}  // namespace

SiteState SiteState::from_moments(double m_tilde, double v_tilde, double log_scale) {
  if (v_tilde == kInf) return {0.0, 0.0, log_scale};
  if (v_tilde == 0.0 || std::isnan(v_tilde)) throw DomainError("site variance must be nonzero");
  return {1.0 / v_tilde, m_tilde / v_tilde, log_scale};
}

SiteState SiteState::from_gaussian(const Gaussian1D& g, double log_scale) {
  return from_moments(g.mean, g.variance, log_scale);
}

Gaussian1D SiteState::as_factor() const { return Gaussian1D::from_natural(precision, shift); }

TauSiteInit init_tau_site(double v0) {
  require_v0(v0);
  return {SiteState::from_moments(0.0, v0), Gaussian1D::belief(0.0, v0)};
}

std::optional<Gaussian1D> compute_cavity(const Gaussian1D& marginal, const SiteState& site) {
  if (marginal.is_vacuous() || !(marginal.variance > 0.0)) {
    throw DomainError("compute_cavity needs a proper marginal");
  }
  try {
    return gaussian_divide(marginal, site.as_factor());
  } catch (const NegativeCavityError&) {
    return std::nullopt;
  }
}

Gaussian1D update_q_tau(const Gaussian1D& cavity_tau, const Gaussian1D& q_w, double v0) {
  require_v0(v0);
  const double second_moment = q_w.variance + q_w.mean * q_w.mean;
  if (cavity_tau.is_vacuous()) {
    return Gaussian1D::belief(-0.5 * v0 * second_moment, v0);
  }
  const double v_cav = cavity_tau.variance;
  const double v_tau = 1.0 / (1.0 / v0 + 1.0 / v_cav);
  const double m_tau = (cavity_tau.mean - 0.5 * v_cav * second_moment) / (1.0 + v_cav / v0);
  return Gaussian1D::belief(m_tau, v_tau);
}

double tau_expectation(const Gaussian1D& q_tau, TauExpectation mode) {
  double e_tau = q_tau.mean;
  if (mode == TauExpectation::truncated_mean) {
    e_tau = rectified_gaussian_moments(q_tau.mean, q_tau.variance).mean;
  }
  return std::max(e_tau, kTauFloor);
}

Gaussian1D update_q_w(const Gaussian1D& cavity_w, double e_tau) {
  e_tau = std::max(e_tau, kTauFloor);
  const double v_w = 1.0 / (cavity_w.precision() + e_tau);
  return Gaussian1D::belief(cavity_w.shift() * v_w, v_w);
}

SiteState refresh_site(const Gaussian1D& q_new, const Gaussian1D& cavity) {
  return {q_new.precision() - cavity.precision(), q_new.shift() - cavity.shift(), 0.0};
}

SiteState damp_site(const SiteState& old_site, const SiteState& fresh, double delta) {
  if (delta == 1.0) return fresh;
  return {delta * fresh.precision + (1.0 - delta) * old_site.precision,
          delta * fresh.shift + (1.0 - delta) * old_site.shift,
          delta * fresh.log_scale + (1.0 - delta) * old_site.log_scale};
}

Gaussian1D attach_site(const Gaussian1D& cavity, const SiteState& site) {
  const double precision = cavity.precision() + site.precision;
  if (!(precision > 0.0)) throw DomainError("site attachment gives an improper marginal");
  return Gaussian1D::from_natural(precision, cavity.shift() + site.shift);
}

std::optional<Gaussian1D> moment_match_from_logZ(const Gaussian1D& cavity, double dlogz_dm,
                                                 double dlogz_dv) {
  const double v = cavity.variance;
  const double m_new = cavity.mean + v * dlogz_dm;
  const double v_new = v - v * v * (dlogz_dm * dlogz_dm - 2.0 * dlogz_dv);
  if (!(v_new > 0.0)) return std::nullopt;
  return Gaussian1D{m_new, v_new};
}

double site_elbo(const Gaussian1D& q_w, const Gaussian1D& q_tau, const Gaussian1D& cavity_w,
                 const Gaussian1D& cavity_tau, double v0) {
  require_v0(v0);
  const RectifiedMoments tau = rectified_gaussian_moments(q_tau.mean, q_tau.variance);
  const double e_tau = tau.mean;
  const double e_tau2 = tau.variance + tau.mean * tau.mean;
  const double e_w2 = q_w.variance + q_w.mean * q_w.mean;

  const double prior_factor = -0.5 * e_tau * e_w2;
  const double hyperprior = std::numbers::ln2 - 0.5 * (kLog2Pi + std::log(v0)) - 0.5 * e_tau2 / v0;
  const double cavities = expected_log_cavity(cavity_w, q_w.mean, q_w.variance) +
                          expected_log_cavity(cavity_tau, tau.mean, tau.variance);

  const double entropy_w = 0.5 * (kLog2Pi + 1.0 + std::log(q_w.variance));
  // Entropy of N(m, v) restricted to [0, inf): lower standardized bound a = −m/s.
  const double s = std::sqrt(q_tau.variance);
  const double a = -q_tau.mean / s;
  const double gamma = inverse_mills(-a);
  const double entropy_tau = 0.5 * (kLog2Pi + 1.0) + std::log(s) + tau.log_z + 0.5 * a * gamma;

  return prior_factor + hyperprior + cavities + entropy_w + entropy_tau;
}

}  // namespace vep
