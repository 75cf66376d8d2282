#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace vep {

struct Dataset {
  Eigen::MatrixXd features;  ///< N × d
  std::vector<int> labels;   ///< N values in {0, 1}
  std::vector<std::string> feature_names;

  [[nodiscard]] std::size_t size() const { return labels.size(); }
  [[nodiscard]] std::size_t dims() const { return static_cast<std::size_t>(features.cols()); }
  /// Throws std::invalid_argument on empty data, shape mismatch, non-finite
  /// features or non-binary labels.
  void validate() const;
};

/// Parse failure; line() is 1-based, 0 when the error is not tied to a line.
class CsvError : public std::runtime_error {
 public:
  CsvError(const std::string& what, std::size_t line) : std::runtime_error(what), line_(line) {}
  [[nodiscard]] std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Comma-separated, header row, last column named "label" with values 0/1.
/// Blank lines are ignored.
Dataset load_csv(const std::filesystem::path& path);
Dataset parse_csv(const std::string& text);

void write_csv(const std::filesystem::path& path, const Dataset& data);

enum class SyntheticKind { separable, sparse, noise };

SyntheticKind parse_synthetic_kind(const std::string& name);

struct SyntheticData {
  Dataset data;
  std::vector<std::size_t> relevant_columns;  ///< columns that carry signal
};

/// separable: labels from the sign of a random hyperplane, points inside the
///   margin resampled.
/// sparse: logistic labels driven by two random columns; the rest are noise.
/// noise: Bernoulli(½) labels independent of the features.
SyntheticData generate_synthetic(SyntheticKind kind, std::size_t n, std::size_t d, std::uint64_t seed);

struct Metrics {
  double accuracy = 0.0;
  double log_loss = 0.0;
  double brier = 0.0;
  std::size_t n = 0;
};

/// Metrics of predicted P(y = 1) against labels; log loss clamps
/// probabilities to [1e-15, 1 − 1e-15].
Metrics compute_metrics(const std::vector<double>& p, const std::vector<int>& labels);

}  // namespace vep
