#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "vep/engine.hpp"

namespace vep {

inline constexpr int kModelFormatVersion = 1;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string to_string(LikelihoodMode mode);
std::string to_string(TauExpectation mode);
std::string to_string(SweepOrder order);
LikelihoodMode parse_likelihood_mode(const std::string& s);
TauExpectation parse_tau_expectation(const std::string& s);
SweepOrder parse_sweep_order(const std::string& s);

/// Shape, config and every stored parameter. Reals are written as "%.17g"
/// strings so that reading back is bit-exact (including "inf").
std::string model_to_json(const PosteriorState& state);
PosteriorState model_from_json(const std::string& text);

void save_model(const std::filesystem::path& path, const PosteriorState& state);
PosteriorState load_model(const std::filesystem::path& path);

/// key = value lines, '#' starts a comment. Unknown keys and bad values are
/// FormatErrors citing the 1-based line.
TrainConfig parse_config(const std::string& text);
TrainConfig load_config(const std::filesystem::path& path);

std::string report_to_json(const ConvergenceReport& report, const PosteriorState& state);

/// Single-line JSON.
std::string metrics_to_json(const Metrics& m);

/// "1,8,1" → {1, 8, 1}, bias on every layer.
NetworkShape parse_layers(const std::string& spec);

}  // namespace vep
