#include "vep/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "vep/random.hpp"

namespace vep {

void TrainConfig::validate() const {
  if (!(v0 > 0.0) || !std::isfinite(v0)) throw std::invalid_argument("v0 must be a positive finite number");
  if (!(damping > 0.0 && damping <= 1.0)) throw std::invalid_argument("damping must lie in (0, 1]");
  if (max_sweeps == 0) throw std::invalid_argument("max_sweeps must be at least 1");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
}

std::size_t PosteriorState::index(std::size_t layer, std::size_t row, std::size_t col) const {
  std::size_t offset = 0;
  for (std::size_t l = 0; l < layer; ++l) offset += shape.rows(l) * shape.cols(l);
  return offset + row * shape.cols(layer) + col;
}

WeightMoments PosteriorState::weight_moments() const {
  WeightMoments out(shape.num_layers());
  std::size_t i = 0;
  for (std::size_t l = 0; l < shape.num_layers(); ++l) {
    const auto rows = static_cast<Eigen::Index>(shape.rows(l));
    const auto cols = static_cast<Eigen::Index>(shape.cols(l));
    out[l].mean.resize(rows, cols);
    out[l].var.resize(rows, cols);
    for (Eigen::Index k = 0; k < rows; ++k) {
      for (Eigen::Index j = 0; j < cols; ++j, ++i) {
        out[l].mean(k, j) = weights[i].q_w.mean;
        out[l].var(k, j) = weights[i].q_w.variance;
      }
    }
  }
  return out;
}

PosteriorState init_state(const NetworkShape& shape, const TrainConfig& config, std::size_t n_obs) {
  shape.validate();
  config.validate();
  PosteriorState state;
  state.shape = shape;
  state.config = config;
  state.observations.assign(n_obs, ObservationState{});
  state.weights.reserve(shape.num_weights());

  const TauSiteInit tau = init_tau_site(config.v0);
  Rng rng(config.seed);
  for (std::size_t l = 0; l < shape.num_layers(); ++l) {
    const double var = config.fan_in_scaling ? 1.0 / static_cast<double>(shape.cols(l)) : 1.0;
    for (std::size_t n = 0; n < shape.rows(l) * shape.cols(l); ++n) {
      WeightState w;
      // Random means break the symmetry between hidden units.
      w.q_w = Gaussian1D::belief(rng.normal(0.0, std::sqrt(var)), var);
      w.evidence = SiteState::from_gaussian(w.q_w);
      w.site_w = SiteState::vacuous();
      w.q_tau = tau.marginal;
      w.site_tau = tau.site;
      state.weights.push_back(w);
    }
  }
  return state;
}

void sweep_prior_sites(PosteriorState& state) {
  const TrainConfig& cfg = state.config;
  for (WeightState& w : state.weights) {
    const auto cav_w = compute_cavity(w.q_w, w.site_w);
    const auto cav_tau = compute_cavity(w.q_tau, w.site_tau);
    if (!cav_w || !cav_tau) {
      ++state.skips.prior_negative_cavity;
      continue;
    }
    const Gaussian1D new_tau = update_q_tau(*cav_tau, w.q_w, cfg.v0);
    const Gaussian1D new_w = update_q_w(*cav_w, tau_expectation(new_tau, cfg.tau_expectation_mode));
    const SiteState site_w = damp_site(w.site_w, refresh_site(new_w, *cav_w), cfg.damping);
    const SiteState site_tau = damp_site(w.site_tau, refresh_site(new_tau, *cav_tau), cfg.damping);
    Gaussian1D q_w;
    Gaussian1D q_tau;
    try {
      q_w = attach_site(*cav_w, site_w);
      q_tau = attach_site(*cav_tau, site_tau);
    } catch (const DomainError&) {
      ++state.skips.prior_negative_cavity;
      continue;
    }
    w.site_w = site_w;
    w.site_tau = site_tau;
    w.q_w = q_w;
    w.q_tau = q_tau;
  }
}

namespace {

Eigen::VectorXd row_of(const Dataset& data, std::size_t i) {
  return data.features.row(static_cast<Eigen::Index>(i)).transpose();
}

void check_data(const PosteriorState& state, const Dataset& data) {
  data.validate();
  if (data.dims() != state.shape.layer_sizes.front()) {
    throw std::invalid_argument("dataset has " + std::to_string(data.dims()) +
                                " features but the network expects " +
                                std::to_string(state.shape.layer_sizes.front()));
  }
  if (state.observations.size() != data.size()) {
    throw std::invalid_argument("state and dataset disagree on the number of observations");
  }
}

}  // namespace

void sweep_likelihood(PosteriorState& state, const Dataset& data) {
  check_data(state, data);
  const TrainConfig& cfg = state.config;
  const double delta = cfg.damping;
  for (std::size_t i = 0; i < data.size(); ++i) {
    ObservationState& obs = state.observations[i];
    const Label y = data.labels[i];
    const ForwardTrace trace = forward(state.shape, state.weight_moments(), row_of(data, i));
    const double m = trace.output_mean();
    const double v = trace.output_var();
    if (!(v > 0.0)) {
      ++state.skips.likelihood_degenerate_output;
      continue;
    }
    obs.log_z = log_Zy(m, v, y, obs.zeta, cfg.likelihood_mode);
    if (cfg.likelihood_mode == LikelihoodMode::paper_literal) {
      const LiteralNormalizer nz = literal_normalizer(m, v, obs.zeta);
      const OutputUpdate out = update_q_aL_paper(m, v, y, nz.m_y, nz.v_y);
      obs.literal_mean = out.mean;
      obs.literal_var = out.variance;
      obs.literal_skipped = out.skipped;
      if (out.skipped) ++state.skips.literal_output;
    }
    const LogZGradient g = grad_log_Zy(m, v, y, obs.zeta, cfg.likelihood_mode);
    const MomentGradients grads = backward(trace, g.d_m, g.d_v);

    std::size_t n = 0;
    for (const LayerMoments& layer : grads.layers) {
      for (Eigen::Index k = 0; k < layer.mean.rows(); ++k) {
        for (Eigen::Index j = 0; j < layer.mean.cols(); ++j, ++n) {
          WeightState& w = state.weights[n];
          const auto matched = moment_match_from_logZ(w.q_w, layer.mean(k, j), layer.var(k, j));
          if (!matched) {
            ++state.skips.likelihood_nonpositive_variance;
            continue;
          }
          const double precision =
              delta * matched->precision() + (1.0 - delta) * w.q_w.precision();
          const double shift = delta * matched->shift() + (1.0 - delta) * w.q_w.shift();
          w.q_w = Gaussian1D::from_natural(precision, shift);
          w.evidence = {precision - w.site_w.precision, shift - w.site_w.shift, 0.0};
        }
      }
    }
  }
  const WeightMoments moments = state.weight_moments();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const ForwardTrace trace = forward(state.shape, moments, row_of(data, i));
    state.observations[i].zeta = update_zeta(trace.output_mean(), trace.output_var());
  }
}

double total_site_elbo(const PosteriorState& state) {
  double total = 0.0;
  for (const WeightState& w : state.weights) {
    const auto cav_w = compute_cavity(w.q_w, w.site_w);
    const auto cav_tau = compute_cavity(w.q_tau, w.site_tau);
    if (!cav_w || !cav_tau) continue;
    if (!cav_w->is_vacuous() && !(cav_w->variance > 0.0)) continue;
    total += site_elbo(w.q_w, w.q_tau, *cav_w, *cav_tau, state.config.v0);
  }
  return total;
}

namespace {

double natural_mismatch(const Gaussian1D& q, double precision, double shift) {
  const double dp = std::abs(q.precision() - precision) / std::max(1.0, std::abs(q.precision()));
  const double ds = std::abs(q.shift() - shift) / std::max(1.0, std::abs(q.shift()));
  return std::max(dp, ds);
}

bool finite_state(const PosteriorState& state) {
  for (const WeightState& w : state.weights) {
    if (!std::isfinite(w.q_w.mean) || !std::isfinite(w.q_w.variance) ||
        !std::isfinite(w.q_tau.mean) || !std::isfinite(w.q_tau.variance)) {
      return false;
    }
  }
  return true;
}

}  // namespace

double site_consistency_error(const PosteriorState& state) {
  double worst = 0.0;
  for (const WeightState& w : state.weights) {
    worst = std::max(worst, natural_mismatch(w.q_w, w.evidence.precision + w.site_w.precision,
                                             w.evidence.shift + w.site_w.shift));
    worst = std::max(worst, natural_mismatch(w.q_tau, w.site_tau.precision, w.site_tau.shift));
  }
  return worst;
}

bool all_variances_positive(const PosteriorState& state) {
  return std::all_of(state.weights.begin(), state.weights.end(), [](const WeightState& w) {
    return w.q_w.variance > 0.0 && w.q_tau.variance > 0.0;
  });
}

TrainResult train(const Dataset& data, const NetworkShape& shape, const TrainConfig& config) {
  TrainResult result{init_state(shape, config, data.size()), {}};
  PosteriorState& state = result.state;
  check_data(state, data);

  std::vector<double> before(state.weights.size());
  for (std::size_t s = 1; s <= config.max_sweeps; ++s) {
    for (std::size_t i = 0; i < before.size(); ++i) before[i] = state.weights[i].q_w.mean;
    const SkipCounters skips_before = state.skips;
    try {
      if (config.sweep_order == SweepOrder::priors_first) {
        sweep_prior_sites(state);
        sweep_likelihood(state, data);
      } else {
        sweep_likelihood(state, data);
        sweep_prior_sites(state);
      }
    } catch (const std::runtime_error& e) {
      throw std::runtime_error("training failed at sweep " + std::to_string(s) + ": " + e.what());
    }
    state.sweeps = s;
    if (!finite_state(state)) {
      throw std::runtime_error("non-finite posterior state at sweep " + std::to_string(s));
    }

    SweepRecord rec;
    rec.sweep = s;
    for (std::size_t i = 0; i < before.size(); ++i) {
      rec.max_delta = std::max(rec.max_delta, std::abs(state.weights[i].q_w.mean - before[i]));
    }
    rec.prior_skips = state.skips.prior_negative_cavity - skips_before.prior_negative_cavity;
    rec.likelihood_skips =
        (state.skips.likelihood_nonpositive_variance - skips_before.likelihood_nonpositive_variance) +
        (state.skips.likelihood_degenerate_output - skips_before.likelihood_degenerate_output);
    rec.elbo = total_site_elbo(state);
    result.report.sweeps.push_back(rec);
    if (rec.max_delta < config.tol) {
      result.report.converged = true;
      break;
    }
  }
  return result;
}

std::pair<double, double> output_moments(const PosteriorState& state, const Eigen::VectorXd& x) {
  const ForwardTrace trace = forward(state.shape, state.weight_moments(), x);
  return {trace.output_mean(), trace.output_var()};
}

double predict_probability(double m_a, double v_a) {
  return sigmoid(m_a / std::sqrt(1.0 + std::numbers::pi * v_a / 8.0));
}

double predict(const PosteriorState& state, const Eigen::VectorXd& x) {
  const auto [m, v] = output_moments(state, x);
  return predict_probability(m, v);
}

std::vector<double> predict_all(const PosteriorState& state, const Dataset& data) {
  if (data.dims() != state.shape.layer_sizes.front()) {
    throw std::invalid_argument("dataset has " + std::to_string(data.dims()) +
                                " features but the model expects " +
                                std::to_string(state.shape.layer_sizes.front()));
  }
  const WeightMoments moments = state.weight_moments();
  std::vector<double> p(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const ForwardTrace trace = forward(state.shape, moments, row_of(data, i));
    p[i] = predict_probability(trace.output_mean(), trace.output_var());
  }
  return p;
}

}  // namespace vep
