#include "vep/jj_likelihood.hpp"

#include <cmath>
#include <numbers>

namespace vep {

namespace {

void require_label(Label y) {
  if (y != 0 && y != 1) throw DomainError("label must be 0 or 1");
}

void require_variance(double v_a) {
  if (std::isnan(v_a) || !(v_a > 0.0)) throw DomainError("v_a must be positive");
}

}  // namespace

double JJSite::log_value(double a) const {
  return log_scale + nat_mean_times_precision * a - 0.5 * nat_precision * a * a;
}

double jj_bound_log(double a, double zeta, Label y) {
  require_label(y);
  return y * a + log_sigmoid(zeta) - 0.5 * (a + zeta) - lambda_zeta(zeta) * (a * a - zeta * zeta);
}

double exact_log_likelihood(double a, Label y) {
  require_label(y);
  return log_sigmoid(y == 1 ? a : -a);
}

JJSite jj_site_from_bound(Label y, double zeta) {
  require_label(y);
  const double lam = lambda_zeta(zeta);
  JJSite site;
  site.zeta = zeta;
  site.nat_precision = 2.0 * lam;
  site.nat_mean_times_precision = y - 0.5;
  site.log_scale = log_sigmoid(zeta) - 0.5 * zeta + lam * zeta * zeta;
  return site;
}

LiteralNormalizer literal_normalizer(double m_a, double v_a, double zeta) {
  require_variance(v_a);
  return {0.5 - m_a / v_a, -2.0 * lambda_zeta(zeta) - 1.0 / v_a};
}

double log_Zy(double m_a, double v_a, Label y, double zeta, LikelihoodMode mode) {
  require_label(y);
  require_variance(v_a);
  if (mode == LikelihoodMode::paper_literal) {
    const auto [m_y, v_y] = literal_normalizer(m_a, v_a, zeta);
    const double d = y - m_y;
    return -0.5 * std::log(2.0 * std::numbers::pi * std::abs(v_y)) - 0.5 * d * d / v_y;
  }
  const JJSite site = jj_site_from_bound(y, zeta);
  const double lam = 0.5 * site.nat_precision;
  const double b = site.nat_mean_times_precision;
  const double denom = 1.0 + 2.0 * lam * v_a;
  return site.log_scale - 0.5 * std::log(denom) +
         (2.0 * m_a * b + b * b * v_a - 2.0 * lam * m_a * m_a) / (2.0 * denom);
}

LogZGradient grad_log_Zy(double m_a, double v_a, Label y, double zeta, LikelihoodMode mode) {
  require_label(y);
  require_variance(v_a);
  if (mode == LikelihoodMode::paper_literal) {
    const auto [m_y, v_y] = literal_normalizer(m_a, v_a, zeta);
    const double r = y - m_y;
    LogZGradient g;
    g.d_m = (m_y - y) / v_y / v_a;
    g.d_v = (r * r / (2.0 * v_y * v_y) + m_a / v_y * r - 1.0 / (2.0 * v_y)) / (v_a * v_a);
    return g;
  }
  const double lam = lambda_zeta(zeta);
  const double b = y - 0.5;
  const double denom = 1.0 + 2.0 * lam * v_a;
  const double r = b - 2.0 * lam * m_a;
  return {r / denom, -lam / denom + r * r / (2.0 * denom * denom)};
}

OutputUpdate update_q_aL_paper(double m_old, double v_old, Label y, double m_y, double v_y) {
  require_label(y);
  if (v_y == 0.0) throw DomainError("v_y must be nonzero");
  OutputUpdate out;
  out.mean = m_old + (m_y - y) / v_y;
  out.variance = v_old + (2.0 * m_old * (y - m_y) - 1.0) / v_y;
  if (!(out.variance > 0.0)) {
    out.mean = m_old;
    out.variance = v_old;
    out.skipped = true;
  }
  return out;
}

double update_zeta(double m_a, double v_a) {
  if (std::isnan(v_a) || v_a < 0.0) throw DomainError("v_a must be non-negative");
  return std::sqrt(m_a * m_a + v_a);
}

}  // namespace vep
