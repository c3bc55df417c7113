#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "discover/predict.hpp"
#include "discover/tabular.hpp"
#include "json.hpp"

namespace discover {

// Bundled desk-scale tasks:
//   two-gaussians-linear  four numerical features, two clusters, linear truth
//   mixed-type-stumps     numerical + categorical features (some immutable),
//                         non-linear truth learned by a stump ensemble
struct SynthSpec {
  std::string generator;
  std::size_t n = 500;
  std::uint64_t seed = 7;
  std::optional<std::string> model;  // builtin kind; generator default when unset
  std::optional<double> shift;       // y* = b(X') + shift; generator default when unset
  std::size_t train_n = 2000;

  static SynthSpec from_json(const nlohmann::json& doc);
};

struct SynthOutput {
  CohortMatrix cohort;
  std::shared_ptr<Predictor> model;
  std::vector<double> target;
  nlohmann::json quickstart;  // run config referencing the files written next to it
};

// Throws ConfigError for unknown generators or n < 10.
SynthOutput synthesize(const SynthSpec& spec);

// data.csv, schema.json, target.csv, predictor.json, config.json
void write_synthetic(const SynthOutput& out, const std::filesystem::path& dir);

}  // namespace discover
