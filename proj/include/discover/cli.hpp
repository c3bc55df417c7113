#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "discover/metrics.hpp"
#include "discover/solver.hpp"
#include "json.hpp"

namespace discover::cli {

// Stable process exit codes.
inline constexpr int kCertified = 0;
inline constexpr int kRuntimeError = 1;
inline constexpr int kConfigError = 2;
inline constexpr int kUncertified = 3;

struct SolveArgs {
  std::filesystem::path config;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
};

struct EvaluateArgs {
  std::filesystem::path factual;
  std::filesystem::path counterfactual;
  std::filesystem::path target;
  std::filesystem::path schema;
  std::filesystem::path out;
  std::filesystem::path predictor;  // predictor JSON used to score the counterfactual cohort
  std::size_t projections = 100;
  std::uint64_t seed = 0;
};

struct SynthesizeArgs {
  std::filesystem::path spec;
  std::filesystem::path out;
};

// Each command reports failures on stderr and returns an exit code; none throws.
int cmd_solve(const SolveArgs& args);
int cmd_evaluate(const EvaluateArgs& args);
int cmd_synthesize(const SynthesizeArgs& args);

// report.json body: certified, iterations_run, returned_iteration,
// final_metrics, config.
nlohmann::json report_json(const SolveReport& report, const MetricsReport& metrics,
                           const nlohmann::json& resolved_config);

}  // namespace discover::cli
