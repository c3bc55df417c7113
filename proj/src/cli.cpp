#include "discover/cli.hpp"

#include <fstream>
#include <sstream>

#include "discover/config.hpp"
#include "discover/error.hpp"
#include "discover/kernels.hpp"
#include "discover/log.hpp"
#include "discover/synth.hpp"
#include "discover/transport.hpp"

namespace discover::cli {

namespace fs = std::filesystem;

namespace {

template <class Body>
int guarded(Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    log::error(e.what());
    return kConfigError;
  } catch (const SchemaError& e) {
    log::error(std::string("schema: ") + e.what());
    return kConfigError;
  } catch (const nlohmann::json::exception& e) {
    log::error(std::string("malformed JSON document: ") + e.what());
    return kConfigError;
  } catch (const Error& e) {
    log::error(e.what());
    return kRuntimeError;
  } catch (const std::exception& e) {
    log::error(std::string("unexpected failure: ") + e.what());
    return kRuntimeError;
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

void write_json(const fs::path& path, const nlohmann::json& doc) { write_text(path, doc.dump(2) + "\n"); }

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

SchemaPtr schema_of(const RunConfig& cfg) {
  if (cfg.schema_inline) return std::make_shared<const Schema>(Schema::from_json(*cfg.schema_inline));
  return std::make_shared<const Schema>(Schema::load(cfg.schema_path));
}

}  // namespace

nlohmann::json report_json(const SolveReport& report, const MetricsReport& metrics,
                           const nlohmann::json& resolved_config) {
  nlohmann::json final_metrics = metrics.to_json();
  final_metrics["ucl_sw"] = report.final_check.ucl_sw;
  final_metrics["ucl_w"] = report.final_check.ucl_w;
  return {{"certified", report.certified},
          {"iterations_run", report.iterations_run},
          {"returned_iteration", report.returned_iteration},
          {"final_metrics", final_metrics},
          {"config", resolved_config}};
}

int cmd_solve(const SolveArgs& args) {
  return guarded([&] {
    RunConfig cfg = load_run_config(args.config);
    if (args.seed) cfg.solver.seed = *args.seed;
    if (args.threads) {
      if (*args.threads < 1) throw ConfigError("--threads must be at least 1");
      kernels::set_thread_count(*args.threads);
    }
    const SchemaPtr schema = schema_of(cfg);
    const CohortMatrix factual = load_csv(cfg.factual, schema);
    const PredictorPtr model = predictor_from_json(cfg.predictor);
    const auto factual_outputs = checked_predict(*model, factual.values());
    const auto ystar = resolve_target(cfg.target, factual_outputs);
    try {
      validate(cfg.solver, factual.row_count());
    } catch (const ConfigError& e) {
      throw anchored(cfg.source_text, cfg.source_label, e.key().empty() ? "solver" : "solver." + e.key(), e.what());
    }

    log::info("solving n=" + std::to_string(factual.row_count()) + " d=" + std::to_string(factual.dim()) +
              " T=" + std::to_string(cfg.solver.iterations) + " optimizer=" + to_string(cfg.solver.optimizer));
    StepObserver observer;
    if (log::enabled(log::Level::kDebug)) {
      observer = [](const StepTrace& s) {
        std::ostringstream msg;
        msg << "t=" << s.record.iteration << " Q=" << s.record.q << " ucl_sw=" << s.record.ucl_sw
            << " ucl_w=" << s.record.ucl_w << " eta=" << s.record.eta << " edited=" << s.record.rows_edited;
        log::debug(msg.str());
      };
    }
    const SolveReport report = solve(factual, ystar, model, cfg.solver, observer);

    const Matrix& final_x = report.cohort ? report.cohort->values() : report.last_iterate;
    const CohortMatrix final_cohort(schema, final_x);
    const auto final_outputs = checked_predict(*model, final_x);
    const auto dirs = sample_projections(factual.dim(), cfg.solver.projections, cfg.solver.seed);
    const MetricsReport metrics = evaluate(final_cohort, factual, final_outputs, ystar, dirs);

    ensure_directory(cfg.output_dir);
    write_text(cfg.output_dir / "trajectory.csv", trajectory_csv(report.trajectory));
    write_json(cfg.output_dir / "metrics.json", metrics.to_json());
    write_json(cfg.output_dir / "report.json", report_json(report, metrics, cfg.to_json()));
    const fs::path cf = cfg.output_dir / "counterfactual.csv";
    if (report.certified) {
      decode_csv(*report.cohort, cf);
    } else {
      std::error_code ec;
      fs::remove(cf, ec);
    }
    log::info(std::string(report.certified ? "certified" : "not certified") + " after " +
              std::to_string(report.iterations_run) + " iterations (ucl_sw=" + format_double(report.final_check.ucl_sw) +
              ", ucl_w=" + format_double(report.final_check.ucl_w) + ")");
    return report.certified ? kCertified : kUncertified;
  });
}

int cmd_evaluate(const EvaluateArgs& args) {
  return guarded([&] {
    if (args.projections == 0) throw ConfigError("--projections must be at least 1");
    const auto schema = std::make_shared<const Schema>(Schema::load(args.schema));
    const CohortMatrix factual = load_csv(args.factual, schema);
    const CohortMatrix counterfactual = load_csv(args.counterfactual, schema);
    if (factual.row_count() != counterfactual.row_count()) {
      throw ArgumentError("row counts differ: factual has " + std::to_string(factual.row_count()) +
                          ", counterfactual has " + std::to_string(counterfactual.row_count()));
    }
    const auto ystar = load_column(args.target);
    if (ystar.size() != factual.row_count()) {
      throw ArgumentError("target has " + std::to_string(ystar.size()) + " values, cohorts have " +
                          std::to_string(factual.row_count()) + " rows");
    }
    const PredictorPtr model = predictor_from_json(read_json(args.predictor));
    const auto y = checked_predict(*model, counterfactual.values());
    const auto y_factual = checked_predict(*model, factual.values());
    const auto dirs = sample_projections(factual.dim(), args.projections, args.seed);
    const MetricsReport metrics = evaluate(counterfactual, factual, y, ystar, dirs);

    ensure_directory(args.out);
    write_json(args.out / "metrics.json", metrics.to_json());
    std::string per_sample = "row,otx\n";
    for (std::size_t i = 0; i < metrics.per_sample_otx.size(); ++i) {
      per_sample += std::to_string(i) + ',' + format_double(metrics.per_sample_otx[i]) + '\n';
    }
    write_text(args.out / "per_sample_otx.csv", per_sample);
    export_cdf(y_factual, args.out / "cdf_factual.csv");
    export_cdf(y, args.out / "cdf_counterfactual.csv");
    export_cdf(ystar, args.out / "cdf_target.csv");
    return 0;
  });
}

int cmd_synthesize(const SynthesizeArgs& args) {
  return guarded([&] {
    const SynthSpec spec = SynthSpec::from_json(read_json(args.spec));
    const SynthOutput out = synthesize(spec);
    write_synthetic(out, args.out);
    log::info("wrote " + spec.generator + " task (n=" + std::to_string(spec.n) + ") to " + args.out.string());
    return 0;
  });
}

}  // namespace discover::cli
