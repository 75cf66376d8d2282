#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace vep {

/// Layer widths [K0, ..., KL] and a bias flag per weight layer.
/// Layer l (1-based) has a K_l × (K_{l−1} + bias_l) weight matrix; the bias
/// input is the last column.
struct NetworkShape {
  std::vector<std::size_t> layer_sizes;
  std::vector<bool> bias;

  /// Shape with a bias on every layer.
  static NetworkShape with_bias(std::vector<std::size_t> sizes);

  [[nodiscard]] std::size_t num_layers() const { return layer_sizes.size() - 1; }
  [[nodiscard]] std::size_t rows(std::size_t layer) const { return layer_sizes[layer + 1]; }
  [[nodiscard]] std::size_t cols(std::size_t layer) const {
    return layer_sizes[layer] + (bias[layer] ? 1 : 0);
  }
  [[nodiscard]] std::size_t num_weights() const;
  /// Throws std::invalid_argument when sizes or flags are inconsistent.
  void validate() const;
};

/// Weight moments of one layer (means and variances, same shape).
struct LayerMoments {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd var;
};

using WeightMoments = std::vector<LayerMoments>;

struct LinearMoments {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
};

/// Moments of a = W z for independent random W and z:
///   m_a = M_w m_z,  v_a = V_w (m_z ∘ m_z) + (M_w ∘ M_w) v_z + V_w v_z.
LinearMoments linear_layer_moments(const Eigen::VectorXd& m_z, const Eigen::VectorXd& v_z,
                                   const Eigen::MatrixXd& m_w, const Eigen::MatrixXd& v_w);

struct ReluCache {
  double alpha = 0.0;
  double gamma = 0.0;
  double mean_excess = 0.0;      // α + γ
  double variance_factor = 0.0;  // 1 − γ(α + γ)
  double pdf = 0.0;              // φ(α)
  double cdf = 0.0;              // Φ(α)
  double cdf_neg = 0.0;          // Φ(−α)
};

struct ReluMoments {
  double mean = 0.0;
  double var = 0.0;
  ReluCache cache;
};

/// Mean and variance of max(a, 0) for a ~ N(m_a, v_a).
/// v_a == 0 short-circuits to (max(m_a, 0), 0).
ReluMoments relu_moments(double m_a, double v_a);

/// Partials of one linear unit's (m_a, v_a) with respect to a single input
/// (m_z, v_z) and its weight (m_w, v_w).
struct LinearPartials {
  double dma_dmz, dma_dvz, dva_dmz, dva_dvz;
  double dma_dmw, dma_dvw, dva_dmw, dva_dvw;
};

/// Per-edge partials; the unit's moments are additive over its fan-in, so
/// these are also the partials of the layer output.
LinearPartials linear_moment_jacobian(double m_z, double v_z, double m_w, double v_w);

struct ReluPartials {
  double dmz_dma = 0.0;
  double dmz_dva = 0.0;
  double dvz_dma = 0.0;
  double dvz_dva = 0.0;
};

/// Partials of relu_moments. At v_a == 0 the subgradient convention
/// dm_z/dm_a = dv_z/dv_a = 1{m_a > 0} is used; v_a < 0 throws.
ReluPartials relu_moment_jacobian(const ReluMoments& out, double m_a, double v_a);

struct LayerTrace {
  Eigen::VectorXd m_in, v_in;  // layer input, bias entry appended (mean 1, var 0)
  Eigen::VectorXd m_a, v_a;
  bool relu = false;
  Eigen::VectorXd m_z, v_z;  // post-activation, only when relu
  std::vector<ReluMoments> activations;
  LayerMoments weights;
};

struct ForwardTrace {
  std::vector<LayerTrace> layers;

  [[nodiscard]] double output_mean() const { return layers.back().m_a(0); }
  [[nodiscard]] double output_var() const { return layers.back().v_a(0); }
};

/// Propagates a deterministic input through the random-weight network:
/// linear + ReLU on hidden layers, linear only on the last.
ForwardTrace forward(const NetworkShape& shape, const WeightMoments& weights,
                     const Eigen::VectorXd& x);

/// d log Z / d(mean) and d log Z / d(var) for every weight.
struct MomentGradients {
  std::vector<LayerMoments> layers;
};

/// Reverse-mode accumulation of output-moment seeds (∂/∂m_aL, ∂/∂v_aL)
/// down to every weight's mean and variance.
MomentGradients backward(const ForwardTrace& trace, double d_m_aL, double d_v_aL);

}  // namespace vep
