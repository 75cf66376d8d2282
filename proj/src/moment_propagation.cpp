#include "vep/moment_propagation.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "vep/gaussian_core.hpp"

namespace vep {

NetworkShape NetworkShape::with_bias(std::vector<std::size_t> sizes) {
  NetworkShape shape;
  shape.bias.assign(sizes.empty() ? 0 : sizes.size() - 1, true);
  shape.layer_sizes = std::move(sizes);
  return shape;
}

std::size_t NetworkShape::num_weights() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < num_layers(); ++l) n += rows(l) * cols(l);
  return n;
}

void NetworkShape::validate() const {
  if (layer_sizes.size() < 2) throw std::invalid_argument("network needs at least one weight layer");
  for (std::size_t k : layer_sizes) {
    if (k == 0) throw std::invalid_argument("layer sizes must be positive");
  }
  if (bias.size() != num_layers()) throw std::invalid_argument("one bias flag per weight layer");
}

LinearMoments linear_layer_moments(const Eigen::VectorXd& m_z, const Eigen::VectorXd& v_z,
                                   const Eigen::MatrixXd& m_w, const Eigen::MatrixXd& v_w) {
  if (m_z.size() != v_z.size() || m_w.rows() != v_w.rows() || m_w.cols() != v_w.cols() ||
      m_w.cols() != m_z.size()) {
    throw std::invalid_argument("linear_layer_moments: dimension mismatch");
  }
  LinearMoments out;
  out.mean = m_w * m_z;
  out.var = v_w * m_z.cwiseAbs2() + m_w.cwiseAbs2() * v_z + v_w * v_z;
  return out;
}

ReluMoments relu_moments(double m_a, double v_a) {
  if (std::isnan(v_a) || v_a < 0.0) throw DomainError("relu_moments needs v_a >= 0");
  ReluMoments out;
  ReluCache& c = out.cache;
  if (v_a == 0.0) {
    const bool on = m_a > 0.0;
    c.alpha = on ? kInf : -kInf;
    c.cdf = on ? 1.0 : 0.0;
    c.cdf_neg = 1.0 - c.cdf;
    out.mean = on ? m_a : 0.0;
    out.var = 0.0;
    return out;
  }
  const double s = std::sqrt(v_a);
  c.alpha = m_a / s;
  const NormalEval e = std_normal_pdf_cdf(c.alpha);
  const TruncationRatios r = truncation_ratios(c.alpha);
  c.pdf = e.pdf;
  c.cdf = e.cdf;
  c.cdf_neg = 0.5 * std::erfc(c.alpha * std::numbers::sqrt2 / 2.0);
  c.gamma = r.gamma;
  c.mean_excess = r.mean_excess;
  c.variance_factor = r.variance_factor;

  // m_z = Φ(α)[m_a + sqrt(v_a) γ]
  const double shifted = s * c.mean_excess;
  out.mean = c.cdf * shifted;
  // v_z = m_z [m_a + sqrt(v_a) γ] Φ(−α) + Φ(α) v_a (1 − γ² − γα)
  out.var = out.mean * shifted * c.cdf_neg + c.cdf * v_a * c.variance_factor;
  return out;
}

LinearPartials linear_moment_jacobian(double m_z, double v_z, double m_w, double v_w) {
  LinearPartials p{};
  p.dma_dmz = m_w;
  p.dma_dvz = 0.0;
  p.dva_dmz = 2.0 * m_z * v_w;
  p.dva_dvz = m_w * m_w + v_w;
  p.dma_dmw = m_z;
  p.dma_dvw = 0.0;
  p.dva_dmw = 2.0 * v_z * m_w;
  p.dva_dvw = m_z * m_z + v_z;
  return p;
}

ReluPartials relu_moment_jacobian(const ReluMoments& out, double m_a, double v_a) {
  if (std::isnan(v_a) || v_a < 0.0) throw DomainError("relu_moment_jacobian needs v_a >= 0");
  ReluPartials p;
  if (v_a == 0.0) {
    const double on = m_a > 0.0 ? 1.0 : 0.0;
    p.dmz_dma = on;
    p.dvz_dva = on;
    return p;
  }
  const ReluCache& c = out.cache;
  const double s = std::sqrt(v_a);
  const double m_z = out.mean;
  const double shifted = s * c.mean_excess;  // m_a + sqrt(v_a) γ

  const double dalpha_dm = 1.0 / s;
  const double dalpha_dv = -m_a / (2.0 * v_a * s);
  // γ'(α) = −(αγ + γ²) = −γ(α + γ)
  const double dgamma_dalpha = -c.gamma * c.mean_excess;
  const double dgamma_dm = dalpha_dm * dgamma_dalpha;
  const double dgamma_dv = dalpha_dv * dgamma_dalpha;
  const double one_minus = c.variance_factor;  // 1 − γ² − αγ

  p.dmz_dma = c.cdf * (1.0 + s * dgamma_dm) + dalpha_dm * shifted * c.pdf;
  p.dmz_dva = dalpha_dv * shifted * c.pdf + c.cdf * (s * dgamma_dv + c.gamma / (2.0 * s));

  p.dvz_dma = m_z * (1.0 + s * dgamma_dm) * c.cdf_neg + dalpha_dm * c.pdf * v_a * one_minus -
              shifted * (m_z * c.pdf * dalpha_dm - c.cdf_neg * p.dmz_dma) -
              c.cdf * v_a *
                  (2.0 * c.gamma * dgamma_dm + c.alpha * dgamma_dm + c.gamma * dalpha_dm);

  // The m_z · [Φ(−α)/m_z · ∂m_z/∂v_a] term is distributed so m_z = 0 is safe.
  p.dvz_dva = c.cdf * (one_minus * (1.0 + v_a * c.gamma * dalpha_dv) -
                       v_a * (2.0 * c.gamma * dgamma_dv + c.alpha * dgamma_dv +
                              c.gamma * dalpha_dv)) +
              m_z * (s * dgamma_dv + c.gamma / (2.0 * s)) * c.cdf_neg -
              m_z * shifted * c.pdf * dalpha_dv + shifted * c.cdf_neg * p.dmz_dva;
  return p;
}

namespace {

void append_bias(const Eigen::VectorXd& m, const Eigen::VectorXd& v, bool bias, Eigen::VectorXd& m_in,
                 Eigen::VectorXd& v_in) {
  const Eigen::Index n = m.size();
  m_in.resize(n + (bias ? 1 : 0));
  v_in.resize(m_in.size());
  m_in.head(n) = m;
  v_in.head(n) = v;
  if (bias) {
    m_in(n) = 1.0;
    v_in(n) = 0.0;
  }
}

}  // namespace

ForwardTrace forward(const NetworkShape& shape, const WeightMoments& weights,
                     const Eigen::VectorXd& x) {
  const std::size_t L = shape.num_layers();
  if (weights.size() != L) throw std::invalid_argument("forward: one weight block per layer");
  if (static_cast<std::size_t>(x.size()) != shape.layer_sizes.front()) {
    throw std::invalid_argument("forward: input size does not match the network");
  }
  ForwardTrace trace;
  trace.layers.resize(L);
  Eigen::VectorXd m = x;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(x.size());
  for (std::size_t l = 0; l < L; ++l) {
    LayerTrace& t = trace.layers[l];
    const LayerMoments& w = weights[l];
    if (static_cast<std::size_t>(w.mean.rows()) != shape.rows(l) ||
        static_cast<std::size_t>(w.mean.cols()) != shape.cols(l)) {
      throw std::invalid_argument("forward: weight block " + std::to_string(l + 1) +
                                  " has the wrong shape");
    }
    t.weights = w;
    append_bias(m, v, shape.bias[l], t.m_in, t.v_in);
    LinearMoments a = linear_layer_moments(t.m_in, t.v_in, w.mean, w.var);
    t.m_a = std::move(a.mean);
    t.v_a = std::move(a.var);
    if (!t.m_a.allFinite() || !t.v_a.allFinite()) {
      throw std::runtime_error("forward: non-finite moments at layer " + std::to_string(l + 1));
    }
    if (l + 1 == L) break;

    t.relu = true;
    t.m_z.resize(t.m_a.size());
    t.v_z.resize(t.m_a.size());
    t.activations.resize(t.m_a.size());
    for (Eigen::Index k = 0; k < t.m_a.size(); ++k) {
      t.activations[k] = relu_moments(t.m_a(k), t.v_a(k));
      t.m_z(k) = t.activations[k].mean;
      t.v_z(k) = t.activations[k].var;
    }
    if (!t.m_z.allFinite() || !t.v_z.allFinite()) {
      throw std::runtime_error("forward: non-finite activation at layer " + std::to_string(l + 1));
    }
    m = t.m_z;
    v = t.v_z;
  }
  return trace;
}

MomentGradients backward(const ForwardTrace& trace, double d_m_aL, double d_v_aL) {
  if (trace.layers.empty() || trace.layers.back().m_a.size() != 1) {
    throw std::invalid_argument("backward: trace must end in a single output unit");
  }
  const std::size_t L = trace.layers.size();
  MomentGradients grads;
  grads.layers.resize(L);

  Eigen::VectorXd g_m = Eigen::VectorXd::Constant(1, d_m_aL);
  Eigen::VectorXd g_v = Eigen::VectorXd::Constant(1, d_v_aL);
  for (std::size_t l = L; l-- > 0;) {
    const LayerTrace& t = trace.layers[l];
    const Eigen::MatrixXd& m_w = t.weights.mean;
    const Eigen::MatrixXd& v_w = t.weights.var;
    if (g_m.size() != m_w.rows()) throw std::invalid_argument("backward: trace/shape mismatch");

    LayerMoments& out = grads.layers[l];
    out.mean = g_m * t.m_in.transpose() + 2.0 * (g_v * t.v_in.transpose()).cwiseProduct(m_w);
    out.var = g_v * (t.m_in.cwiseAbs2() + t.v_in).transpose();
    if (l == 0) break;

    const LayerTrace& below = trace.layers[l - 1];
    const Eigen::Index n = below.m_a.size();
    const Eigen::VectorXd dm_z =
        (m_w.transpose() * g_m + 2.0 * t.m_in.cwiseProduct(v_w.transpose() * g_v)).head(n);
    const Eigen::VectorXd dv_z = ((m_w.cwiseAbs2() + v_w).transpose() * g_v).head(n);

    Eigen::VectorXd next_m(n), next_v(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const ReluPartials p = relu_moment_jacobian(below.activations[k], below.m_a(k), below.v_a(k));
      next_m(k) = dm_z(k) * p.dmz_dma + dv_z(k) * p.dvz_dma;
      next_v(k) = dm_z(k) * p.dmz_dva + dv_z(k) * p.dvz_dva;
    }
    g_m = std::move(next_m);
    g_v = std::move(next_v);
  }
  return grads;
}

}  // namespace vep
