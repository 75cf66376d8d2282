#include <iostream>

#include <CLI11.hpp>

#include "vep/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Variational expectation propagation for sparse Bayesian classifiers"};
  app.require_subcommand(1);

  vep::GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write a synthetic dataset");
  g->add_option("--kind", gen.kind, "separable, sparse or noise")->required();
  g->add_option("--n", gen.n, "rows")->required()->check(CLI::PositiveNumber);
  g->add_option("--d", gen.d, "features")->required()->check(CLI::PositiveNumber);
  g->add_option("--seed", gen.seed, "seed");
  g->add_option("--out", gen.out, "output CSV")->required();

  vep::TrainArgs tr;
  std::string config, report;
  auto* t = app.add_subcommand("train", "Fit a model");
  t->add_option("--data", tr.data, "training CSV")->required();
  t->add_option("--layers", tr.layers, "layer sizes, e.g. 20,8,1")->required();
  t->add_option("--config", config, "key = value config file");
  t->add_option("--out", tr.out, "model JSON")->required();
  t->add_option("--report", report, "convergence report JSON");

  vep::PredictArgs pr;
  auto* p = app.add_subcommand("predict", "Write per-row probabilities");
  p->add_option("--model", pr.model, "model JSON")->required();
  p->add_option("--data", pr.data, "CSV")->required();
  p->add_option("--out", pr.out, "predictions CSV")->required();

  vep::EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Print metrics as JSON");
  e->add_option("--model", ev.model, "model JSON")->required();
  e->add_option("--data", ev.data, "CSV")->required();

  vep::EquivalenceArgs eq;
  auto* q = app.add_subcommand("equivalence", "Compare the two linear-regression update routes");
  q->add_option("--n", eq.n, "cases")->check(CLI::PositiveNumber);
  q->add_option("--seed", eq.seed, "seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err);
  }

  if (*g) return vep::cmd_generate(gen, std::cout, std::cerr);
  if (*t) {
    if (!config.empty()) tr.config = config;
    if (!report.empty()) tr.report = report;
    return vep::cmd_train(tr, std::cout, std::cerr);
  }
  if (*p) return vep::cmd_predict(pr, std::cout, std::cerr);
  if (*e) return vep::cmd_evaluate(ev, std::cout, std::cerr);
  return vep::cmd_equivalence(eq, std::cout, std::cerr);
}
