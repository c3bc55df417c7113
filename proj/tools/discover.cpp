#include <CLI11.hpp>

#include "discover/cli.hpp"

int main(int argc, char** argv) {
  using namespace discover::cli;
  CLI::App app{"Distributional counterfactual search with certified transport bounds"};
  app.require_subcommand(1);

  SolveArgs solve;
  auto* s = app.add_subcommand("solve", "Run the solver on a run configuration");
  s->add_option("--config", solve.config, "Run configuration (JSON)")->required();
  s->add_option("--threads", solve.threads, "Cap on worker threads (results do not depend on it)");
  s->add_option("--seed", solve.seed, "Override solver.seed");

  EvaluateArgs eval;
  auto* e = app.add_subcommand("evaluate", "Compute metrics for a counterfactual cohort");
  e->add_option("--factual", eval.factual, "Factual cohort CSV")->required();
  e->add_option("--counterfactual", eval.counterfactual, "Counterfactual cohort CSV")->required();
  e->add_option("--target", eval.target, "Target outputs, one column")->required();
  e->add_option("--schema", eval.schema, "Schema JSON")->required();
  e->add_option("--out", eval.out, "Output directory")->required();
  e->add_option("--predictor", eval.predictor, "Predictor JSON")->required();
  e->add_option("--projections", eval.projections, "Number of projections")->capture_default_str();
  e->add_option("--seed", eval.seed, "Projection seed")->capture_default_str();

  SynthesizeArgs synth;
  auto* y = app.add_subcommand("synthesize", "Write a bundled synthetic task");
  y->add_option("--spec", synth.spec, "Generator spec (JSON)")->required();
  y->add_option("--out", synth.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kConfigError;
  }

  if (s->parsed()) return cmd_solve(solve);
  if (e->parsed()) return cmd_evaluate(eval);
  return cmd_synthesize(synth);
}
