#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "discover/error.hpp"
#include "discover/solver.hpp"
#include "json.hpp"

namespace discover {

enum class TargetTransform { kNone, kShift, kScaleToMean };

// y* either comes from a file of explicit values or from a transform of the
// factual outputs. Explicit values win when both are given.
struct TargetSpec {
  std::optional<std::filesystem::path> values;
  TargetTransform transform = TargetTransform::kNone;
  double amount = 0.0;  // shift c, or the requested mean
};

struct RunConfig {
  std::filesystem::path factual;
  std::filesystem::path schema_path;              // empty when the schema is inline
  std::optional<nlohmann::json> schema_inline;
  nlohmann::json predictor;                       // resolved spec, never a {"path": ...} reference
  TargetSpec target;
  SolverConfig solver;
  std::filesystem::path output_dir;
  std::string source_text;
  std::string source_label;

  // Fully resolved document, defaults included.
  nlohmann::json to_json() const;
};

// Relative paths resolve against `base_dir`. Errors are ConfigError with the
// message prefixed by "<label>:<line>: " when a line can be identified.
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir,
                           const std::string& label = "config");
RunConfig load_run_config(const std::filesystem::path& path);

// "<label>:<line>: <message>" with the line of `key` in `text` when found.
ConfigError anchored(std::string_view text, const std::string& label, const std::string& key,
                     const std::string& message);

// 1-based line of the value at dotted `key` ("solver.k") in JSON `text`, or 0.
std::size_t locate_key(std::string_view text, std::string_view key);

std::vector<double> resolve_target(const TargetSpec& spec, std::span<const double> factual_outputs);

}  // namespace discover
