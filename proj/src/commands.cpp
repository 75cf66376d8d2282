#include "vep/commands.hpp"

#include <cstdio>
#include <exception>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "vep/dataset.hpp"
#include "vep/engine.hpp"
#include "vep/linreg_equivalence.hpp"
#include "vep/model_io.hpp"

namespace vep {

namespace {

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace

int cmd_generate(const GenerateArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const SyntheticData syn = generate_synthetic(parse_synthetic_kind(args.kind), args.n, args.d, args.seed);
    write_csv(args.out, syn.data);
    const nlohmann::json meta = {{"kind", args.kind},
                                 {"n", args.n},
                                 {"d", args.d},
                                 {"seed", args.seed},
                                 {"relevant_columns", syn.relevant_columns}};
    write_text(args.out + ".meta.json", meta.dump(1) + "\n");
    out << "wrote " << args.n << " rows to " << args.out << '\n';
    return 0;
  });
}

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Dataset data = load_csv(args.data);
    const NetworkShape shape = parse_layers(args.layers);
    const TrainConfig config = args.config ? load_config(*args.config) : TrainConfig{};
    const TrainResult result = train(data, shape, config);
    save_model(args.out, result.state);
    if (args.report) write_text(*args.report, report_to_json(result.report, result.state));
    const SweepRecord& last = result.report.sweeps.back();
    out << (result.report.converged ? "converged" : "stopped") << " after " << last.sweep
        << " sweeps, max delta " << last.max_delta << '\n';
    return 0;
  });
}

int cmd_predict(const PredictArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const PosteriorState state = load_model(args.model);
    const Dataset data = load_csv(args.data);
    const std::vector<double> p = predict_all(state, data);
    std::string text = "p\n";
    char buf[32];
    for (double x : p) {
      std::snprintf(buf, sizeof buf, "%.17g\n", x);
      text += buf;
    }
    write_text(args.out, text);
    out << "wrote " << p.size() << " predictions to " << args.out << '\n';
    return 0;
  });
}

int cmd_evaluate(const EvaluateArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const PosteriorState state = load_model(args.model);
    const Dataset data = load_csv(args.data);
    const Metrics m = compute_metrics(predict_all(state, data), data.labels);
    out << metrics_to_json(m) << '\n';
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-10s %10s\n%-10s %10.4f\n%-10s %10.4f\n%-10s %10.4f\n%-10s %10zu\n",
                  "metric", "value", "accuracy", m.accuracy, "log_loss", m.log_loss, "brier", m.brier, "n", m.n);
    err << buf;
    return 0;
  });
}

int cmd_equivalence(const EquivalenceArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const EquivalenceReport rep = equivalence_report(args.n, args.seed);
    const nlohmann::json j = {{"n_cases", rep.n_cases},
                              {"max_delta_mean", rep.max_delta_mean},
                              {"max_delta_var", rep.max_delta_var},
                              {"tolerance", kEquivalenceTolerance},
                              {"pass", rep.pass}};
    out << j.dump() << '\n';
    return rep.pass ? 0 : 1;
  });
}

}  // namespace vep
