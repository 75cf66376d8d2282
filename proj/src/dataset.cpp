#include "vep/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "vep/gaussian_core.hpp"
#include "vep/random.hpp"

namespace vep {

void Dataset::validate() const {
  if (labels.empty()) throw std::invalid_argument("dataset has no rows");
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw std::invalid_argument("feature rows and labels differ in count");
  }
  if (features.cols() < 1) throw std::invalid_argument("dataset has no feature columns");
  if (!features.allFinite()) throw std::invalid_argument("dataset contains NaN or Inf");
  for (int y : labels) {
    if (y != 0 && y != 1) throw std::invalid_argument("labels must be 0 or 1");
  }
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string at_line(std::size_t line, const std::string& msg) {
  return "line " + std::to_string(line) + ": " + msg;
}

double parse_number(std::string_view field, std::size_t line, std::size_t column) {
  double value = 0.0;
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    throw CsvError(at_line(line, "column " + std::to_string(column) + ": '" + std::string(field) +
                                     "' is not a number"),
                   line);
  }
  if (!std::isfinite(value)) {
    throw CsvError(at_line(line, "column " + std::to_string(column) + ": non-finite value"), line);
  }
  return value;
}

}  // namespace

Dataset parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  std::vector<double> values;
  std::vector<int> labels;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    const auto fields = split(line);
    if (header.empty()) {
      for (auto f : fields) header.emplace_back(f);
      if (header.back() != "label") throw CsvError(at_line(line_no, "last header column must be 'label'"), line_no);
      if (header.size() < 2) throw CsvError(at_line(line_no, "header has no feature columns"), line_no);
      continue;
    }
    if (fields.size() != header.size()) {
      throw CsvError(at_line(line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                                          std::to_string(fields.size())),
                     line_no);
    }
    for (std::size_t c = 0; c + 1 < fields.size(); ++c) values.push_back(parse_number(fields[c], line_no, c + 1));
    const std::string_view label = fields.back();
    if (label == "0" || label == "1") {
      labels.push_back(label == "1" ? 1 : 0);
    } else {
      throw CsvError(at_line(line_no, "label must be 0 or 1, got '" + std::string(label) + "'"), line_no);
    }
  }
  if (labels.empty()) throw CsvError("no data rows", 0);

  Dataset data;
  const auto d = static_cast<Eigen::Index>(header.size() - 1);
  const auto n = static_cast<Eigen::Index>(labels.size());
  data.features = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), n, d);
  data.labels = std::move(labels);
  data.feature_names.assign(header.begin(), header.end() - 1);
  return data;
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CsvError("cannot open " + path.string(), 0);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

void write_csv(const std::filesystem::path& path, const Dataset& data) {
  data.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (std::size_t c = 0; c < data.dims(); ++c) {
    out << (c < data.feature_names.size() ? data.feature_names[c] : "x" + std::to_string(c + 1)) << ',';
  }
  out << "label\n";
  char buf[32];
  for (Eigen::Index i = 0; i < data.features.rows(); ++i) {
    for (Eigen::Index c = 0; c < data.features.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", data.features(i, c));
      out << buf << ',';
    }
    out << data.labels[static_cast<std::size_t>(i)] << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

SyntheticKind parse_synthetic_kind(const std::string& name) {
  if (name == "separable") return SyntheticKind::separable;
  if (name == "sparse") return SyntheticKind::sparse;
  if (name == "noise") return SyntheticKind::noise;
  throw std::invalid_argument("unknown dataset kind '" + name + "' (separable, sparse, noise)");
}

SyntheticData generate_synthetic(SyntheticKind kind, std::size_t n, std::size_t d, std::uint64_t seed) {
  if (n == 0 || d == 0) throw std::invalid_argument("n and d must be at least 1");
  constexpr double kMargin = 0.2;
  constexpr double kSignal = 3.0;
  Rng rng(seed);
  SyntheticData out;
  Dataset& data = out.data;
  data.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  data.labels.resize(n);
  for (std::size_t c = 0; c < d; ++c) data.feature_names.push_back("x" + std::to_string(c + 1));

  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  if (kind == SyntheticKind::separable) {
    for (Eigen::Index c = 0; c < w.size(); ++c) w(c) = rng.normal();
    w /= w.norm();
    for (std::size_t c = 0; c < d; ++c) out.relevant_columns.push_back(c);
  } else if (kind == SyntheticKind::sparse) {
    std::vector<std::size_t> cols(d);
    for (std::size_t c = 0; c < d; ++c) cols[c] = c;
    const std::size_t k = std::min<std::size_t>(2, d);
    for (std::size_t i = 0; i < k; ++i) {
      std::swap(cols[i], cols[i + rng.below(d - i)]);
      w(static_cast<Eigen::Index>(cols[i])) = rng.bernoulli(0.5) ? kSignal : -kSignal;
    }
    out.relevant_columns.assign(cols.begin(), cols.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(out.relevant_columns.begin(), out.relevant_columns.end());
  }

  for (std::size_t i = 0; i < n; ++i) {
    auto row = data.features.row(static_cast<Eigen::Index>(i));
    double score = 0.0;
    do {
      for (Eigen::Index c = 0; c < row.size(); ++c) row(c) = rng.normal();
      score = row.dot(w.transpose());
    } while (kind == SyntheticKind::separable && std::abs(score) < kMargin);
    switch (kind) {
      case SyntheticKind::separable: data.labels[i] = score > 0.0 ? 1 : 0; break;
      case SyntheticKind::sparse: data.labels[i] = rng.bernoulli(sigmoid(score)) ? 1 : 0; break;
      case SyntheticKind::noise: data.labels[i] = rng.bernoulli(0.5) ? 1 : 0; break;
    }
  }
  return out;
}

Metrics compute_metrics(const std::vector<double>& p, const std::vector<int>& labels) {
  if (p.size() != labels.size() || p.empty()) throw std::invalid_argument("metrics need matching, non-empty inputs");
  constexpr double kClamp = 1e-15;
  Metrics m;
  m.n = p.size();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const int y = labels[i];
    const double pi = std::clamp(p[i], kClamp, 1.0 - kClamp);
    m.accuracy += ((p[i] >= 0.5 ? 1 : 0) == y) ? 1.0 : 0.0;
    m.log_loss -= std::log(y == 1 ? pi : 1.0 - pi);
    m.brier += (p[i] - y) * (p[i] - y);
  }
  const double n = static_cast<double>(m.n);
  m.accuracy /= n;
  m.log_loss /= n;
  m.brier /= n;
  return m;
}

}  // namespace vep
