#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace vep {

struct GenerateArgs {
  std::string kind;
  std::size_t n = 0;
  std::size_t d = 0;
  std::uint64_t seed = 0;
  std::string out;
};

struct TrainArgs {
  std::string data;
  std::string layers;
  std::optional<std::string> config;
  std::string out;
  std::optional<std::string> report;
};

struct PredictArgs {
  std::string model;
  std::string data;
  std::string out;
};

struct EvaluateArgs {
  std::string model;
  std::string data;
};

struct EquivalenceArgs {
  std::size_t n = 1000;
  std::uint64_t seed = 0;
};

// Each command returns the process exit code. Failures print one line
// "error: <reason>" to err and return 1.
int cmd_generate(const GenerateArgs& args, std::ostream& out, std::ostream& err);
int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err);
int cmd_predict(const PredictArgs& args, std::ostream& out, std::ostream& err);
int cmd_evaluate(const EvaluateArgs& args, std::ostream& out, std::ostream& err);
int cmd_equivalence(const EquivalenceArgs& args, std::ostream& out, std::ostream& err);

}  // namespace vep
