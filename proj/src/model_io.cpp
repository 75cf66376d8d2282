#include "vep/model_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace vep {

using nlohmann::json;

std::string to_string(LikelihoodMode mode) {
  return mode == LikelihoodMode::verified ? "verified" : "paper_literal";
}

std::string to_string(TauExpectation mode) {
  return mode == TauExpectation::clamped_mean ? "clamped_mean" : "truncated_mean";
}

std::string to_string(SweepOrder order) {
  return order == SweepOrder::priors_first ? "priors_first" : "likelihood_first";
}

LikelihoodMode parse_likelihood_mode(const std::string& s) {
  if (s == "verified") return LikelihoodMode::verified;
  if (s == "paper_literal") return LikelihoodMode::paper_literal;
  throw FormatError("likelihood_mode must be verified or paper_literal, got '" + s + "'");
}

TauExpectation parse_tau_expectation(const std::string& s) {
  if (s == "clamped_mean") return TauExpectation::clamped_mean;
  if (s == "truncated_mean") return TauExpectation::truncated_mean;
  throw FormatError("tau_expectation_mode must be clamped_mean or truncated_mean, got '" + s + "'");
}

SweepOrder parse_sweep_order(const std::string& s) {
  if (s == "priors_first") return SweepOrder::priors_first;
  if (s == "likelihood_first") return SweepOrder::likelihood_first;
  throw FormatError("sweep_order must be priors_first or likelihood_first, got '" + s + "'");
}

namespace {

std::string real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_real(const std::string& s) {
  if (s.empty()) throw FormatError("empty number");
  errno = 0;
  char* end = nullptr;
  const double x = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE) throw FormatError("bad number '" + s + "'");
  return x;
}

double parse_real(const json& j) {
  if (!j.is_string()) throw FormatError("reals must be stored as strings");
  return parse_real(j.get<std::string>());
}

std::uint64_t parse_uint(const std::string& s) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    throw FormatError("bad integer '" + s + "'");
  }
  if (pos != s.size() || s.front() == '-') throw FormatError("bad integer '" + s + "'");
  return v;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw FormatError("bad flag '" + s + "' (true/false)");
}

json site_json(const SiteState& s) { return json::array({real(s.precision), real(s.shift), real(s.log_scale)}); }

SiteState site_from(const json& j) { return {parse_real(j.at(0)), parse_real(j.at(1)), parse_real(j.at(2))}; }

json config_json(const TrainConfig& c) {
  return {{"v0", real(c.v0)},
          {"damping", real(c.damping)},
          {"max_sweeps", c.max_sweeps},
          {"tol", real(c.tol)},
          {"likelihood_mode", to_string(c.likelihood_mode)},
          {"tau_expectation_mode", to_string(c.tau_expectation_mode)},
          {"seed", c.seed},
          {"fan_in_scaling", c.fan_in_scaling},
          {"sweep_order", to_string(c.sweep_order)}};
}

TrainConfig config_from(const json& j) {
  TrainConfig c;
  c.v0 = parse_real(j.at("v0"));
  c.damping = parse_real(j.at("damping"));
  c.max_sweeps = j.at("max_sweeps").get<std::size_t>();
  c.tol = parse_real(j.at("tol"));
  c.likelihood_mode = parse_likelihood_mode(j.at("likelihood_mode").get<std::string>());
  c.tau_expectation_mode = parse_tau_expectation(j.at("tau_expectation_mode").get<std::string>());
  c.seed = j.at("seed").get<std::uint64_t>();
  c.fan_in_scaling = j.at("fan_in_scaling").get<bool>();
  c.sweep_order = parse_sweep_order(j.at("sweep_order").get<std::string>());
  c.validate();
  return c;
}

json skips_json(const SkipCounters& s) {
  return {{"prior_negative_cavity", s.prior_negative_cavity},
          {"likelihood_nonpositive_variance", s.likelihood_nonpositive_variance},
          {"likelihood_degenerate_output", s.likelihood_degenerate_output},
          {"literal_output", s.literal_output}};
}

}  // namespace

std::string model_to_json(const PosteriorState& state) {
  json j;
  j["format"] = "vep-model";
  j["version"] = kModelFormatVersion;
  j["shape"] = {{"layer_sizes", state.shape.layer_sizes}, {"bias", state.shape.bias}};
  j["config"] = config_json(state.config);
  j["sweeps"] = state.sweeps;
  j["skips"] = skips_json(state.skips);
  j["weight_fields"] = {"q_w_mean", "q_w_var", "q_tau_mean", "q_tau_var", "site_w", "site_tau", "evidence"};
  j["site_fields"] = {"precision", "shift", "log_scale"};
  json weights = json::array();
  for (const WeightState& w : state.weights) {
    weights.push_back({real(w.q_w.mean), real(w.q_w.variance), real(w.q_tau.mean), real(w.q_tau.variance),
                       site_json(w.site_w), site_json(w.site_tau), site_json(w.evidence)});
  }
  j["weights"] = std::move(weights);
  j["observation_fields"] = {"zeta", "log_z", "literal_mean", "literal_var", "literal_skipped"};
  json obs = json::array();
  for (const ObservationState& o : state.observations) {
    obs.push_back({real(o.zeta), real(o.log_z), real(o.literal_mean), real(o.literal_var), o.literal_skipped});
  }
  j["observations"] = std::move(obs);
  return j.dump(1) + "\n";
}

PosteriorState model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format") != "vep-model") throw FormatError("not a model file");
    if (j.at("version") != kModelFormatVersion) {
      throw FormatError("unsupported model version " + j.at("version").dump());
    }
    PosteriorState s;
    s.shape.layer_sizes = j.at("shape").at("layer_sizes").get<std::vector<std::size_t>>();
    s.shape.bias = j.at("shape").at("bias").get<std::vector<bool>>();
    s.shape.validate();
    s.config = config_from(j.at("config"));
    s.sweeps = j.at("sweeps").get<std::size_t>();
    const json& sk = j.at("skips");
    s.skips.prior_negative_cavity = sk.at("prior_negative_cavity").get<std::size_t>();
    s.skips.likelihood_nonpositive_variance = sk.at("likelihood_nonpositive_variance").get<std::size_t>();
    s.skips.likelihood_degenerate_output = sk.at("likelihood_degenerate_output").get<std::size_t>();
    s.skips.literal_output = sk.at("literal_output").get<std::size_t>();

    const json& ws = j.at("weights");
    if (ws.size() != s.shape.num_weights()) {
      throw FormatError("model has " + std::to_string(ws.size()) + " weights, shape needs " +
                        std::to_string(s.shape.num_weights()));
    }
    for (const json& w : ws) {
      WeightState x;
      x.q_w = {parse_real(w.at(0)), parse_real(w.at(1))};
      x.q_tau = {parse_real(w.at(2)), parse_real(w.at(3))};
      x.site_w = site_from(w.at(4));
      x.site_tau = site_from(w.at(5));
      x.evidence = site_from(w.at(6));
      s.weights.push_back(x);
    }
    for (const json& o : j.at("observations")) {
      ObservationState x;
      x.zeta = parse_real(o.at(0));
      x.log_z = parse_real(o.at(1));
      x.literal_mean = parse_real(o.at(2));
      x.literal_var = parse_real(o.at(3));
      x.literal_skipped = o.at(4).get<bool>();
      s.observations.push_back(x);
    }
    return s;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const PosteriorState& state) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << model_to_json(state);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

PosteriorState load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

TrainConfig parse_config(const std::string& text) {
  TrainConfig c;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  const auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return std::string();
    return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
  };
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) throw FormatError(where + "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "v0") c.v0 = parse_real(value);
      else if (key == "damping") c.damping = parse_real(value);
      else if (key == "max_sweeps") c.max_sweeps = parse_uint(value);
      else if (key == "tol") c.tol = parse_real(value);
      else if (key == "likelihood_mode") c.likelihood_mode = parse_likelihood_mode(value);
      else if (key == "tau_expectation_mode") c.tau_expectation_mode = parse_tau_expectation(value);
      else if (key == "seed") c.seed = parse_uint(value);
      else if (key == "fan_in_scaling") c.fan_in_scaling = parse_bool(value);
      else if (key == "sweep_order") c.sweep_order = parse_sweep_order(value);
      else throw FormatError("unknown key '" + key + "'");
    } catch (const FormatError& e) {
      throw FormatError(where + e.what());
    }
  }
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  return c;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string report_to_json(const ConvergenceReport& report, const PosteriorState& state) {
  json sweeps = json::array();
  for (const SweepRecord& r : report.sweeps) {
    sweeps.push_back({{"sweep", r.sweep},
                      {"max_delta", r.max_delta},
                      {"prior_skips", r.prior_skips},
                      {"likelihood_skips", r.likelihood_skips},
                      {"elbo", r.elbo}});
  }
  json j = {{"converged", report.converged},
            {"n_sweeps", report.sweeps.size()},
            {"skips", skips_json(state.skips)},
            {"config", config_json(state.config)},
            {"sweeps", std::move(sweeps)}};
  return j.dump(1) + "\n";
}

std::string metrics_to_json(const Metrics& m) {
  json j = {{"accuracy", m.accuracy}, {"log_loss", m.log_loss}, {"brier", m.brier}, {"n", m.n}};
  return j.dump();
}

NetworkShape parse_layers(const std::string& spec) {
  std::vector<std::size_t> sizes;
  std::stringstream in(spec);
  std::string part;
  while (std::getline(in, part, ',')) {
    try {
      const std::uint64_t v = parse_uint(part);
      sizes.push_back(static_cast<std::size_t>(v));
    } catch (const FormatError&) {
      throw std::invalid_argument("--layers must be comma-separated positive integers, got '" + spec + "'");
    }
  }
  NetworkShape shape = NetworkShape::with_bias(sizes);
  shape.validate();
  if (shape.layer_sizes.back() != 1) throw std::invalid_argument("the last layer must have exactly one unit");
  return shape;
}

}  // namespace vep
