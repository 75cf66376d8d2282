#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "vep/dataset.hpp"
#include "vep/jj_likelihood.hpp"
#include "vep/moment_propagation.hpp"
#include "vep/site_calculus.hpp"

namespace vep {

enum class SweepOrder { priors_first, likelihood_first };

struct TrainConfig {
  double v0 = 1.0;
  double damping = 0.9;
  std::size_t max_sweeps = 500;
  double tol = 1e-4;
  LikelihoodMode likelihood_mode = LikelihoodMode::verified;
  TauExpectation tau_expectation_mode = TauExpectation::clamped_mean;
  std::uint64_t seed = 0;
  bool fan_in_scaling = false;
  SweepOrder sweep_order = SweepOrder::priors_first;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Everything stored for one weight w_kjl and its precision τ_kjl.
struct WeightState {
  Gaussian1D q_w;
  Gaussian1D q_tau;
  SiteState site_w;    ///< prior site in w
  SiteState site_tau;  ///< prior site in τ
  /// q_w ÷ site_w: the initial belief times every likelihood update.
  SiteState evidence;
};

struct ObservationState {
  double zeta = 1.0;
  double log_z = 0.0;  ///< log Z_y at this observation's last update
  // Direct output-moment update, filled in paper_literal mode only.
  double literal_mean = 0.0;
  double literal_var = 0.0;
  bool literal_skipped = false;
};

struct SkipCounters {
  std::size_t prior_negative_cavity = 0;
  std::size_t likelihood_nonpositive_variance = 0;
  std::size_t likelihood_degenerate_output = 0;
  std::size_t literal_output = 0;
};

struct PosteriorState {
  NetworkShape shape;
  TrainConfig config;
  std::vector<WeightState> weights;  ///< layer, then row, then column
  std::vector<ObservationState> observations;
  std::size_t sweeps = 0;
  SkipCounters skips;

  [[nodiscard]] std::size_t index(std::size_t layer, std::size_t row, std::size_t col) const;
  WeightState& at(std::size_t layer, std::size_t row, std::size_t col) {
    return weights[index(layer, row, col)];
  }
  [[nodiscard]] const WeightState& at(std::size_t layer, std::size_t row, std::size_t col) const {
    return weights[index(layer, row, col)];
  }
  /// Means and variances of q(w) per layer, in forward() layout.
  [[nodiscard]] WeightMoments weight_moments() const;
};

PosteriorState init_state(const NetworkShape& shape, const TrainConfig& config, std::size_t n_obs);

void sweep_prior_sites(PosteriorState& state);
void sweep_likelihood(PosteriorState& state, const Dataset& data);

struct SweepRecord {
  std::size_t sweep = 0;
  double max_delta = 0.0;  ///< max |Δ mean of q(w)|
  std::size_t prior_skips = 0;
  std::size_t likelihood_skips = 0;
  double elbo = 0.0;  ///< sum of per-site lower bounds on log Z_w
};

struct ConvergenceReport {
  std::vector<SweepRecord> sweeps;
  bool converged = false;
};

struct TrainResult {
  PosteriorState state;
  ConvergenceReport report;
};

/// Outer loop of prior and likelihood sweeps until the max change in weight
/// means drops below tol or max_sweeps is reached. Throws std::runtime_error
/// naming the sweep when the state becomes non-finite.
TrainResult train(const Dataset& data, const NetworkShape& shape, const TrainConfig& config);

/// Sum over weights of site_elbo at the current marginals; weights whose
/// cavity is not proper are left out.
double total_site_elbo(const PosteriorState& state);

/// Max relative mismatch between stored marginals and the product of their
/// sites with the stored remainder.
double site_consistency_error(const PosteriorState& state);

bool all_variances_positive(const PosteriorState& state);

/// Output moments (m_aL, v_aL) for one input.
std::pair<double, double> output_moments(const PosteriorState& state, const Eigen::VectorXd& x);

/// Probit-corrected predictive probability σ(m / sqrt(1 + π v / 8)).
double predict_probability(double m_a, double v_a);
double predict(const PosteriorState& state, const Eigen::VectorXd& x);
std::vector<double> predict_all(const PosteriorState& state, const Dataset& data);

}  // namespace vep
