#include "discover/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "discover/error.hpp"
#include "discover/rng.hpp"

namespace discover {

SynthSpec SynthSpec::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("generator spec must be a JSON object");
  SynthSpec s;
  for (const auto& [key, v] : doc.items()) {
    if (key == "generator" && v.is_string()) {
      s.generator = v.get<std::string>();
    } else if (key == "n" && v.is_number_integer()) {
      const auto n = v.get<long long>();
      if (n < 0) throw ConfigError("'n' must be non-negative", "n");
      s.n = static_cast<std::size_t>(n);
    } else if (key == "seed" && v.is_number_integer() && v.get<long long>() >= 0) {
      s.seed = v.get<std::uint64_t>();
    } else if (key == "model" && v.is_string()) {
      s.model = v.get<std::string>();
    } else if (key == "shift" && v.is_number()) {
      s.shift = v.get<double>();
    } else if (key == "train_n" && v.is_number_integer() && v.get<long long>() >= 0) {
      s.train_n = v.get<std::size_t>();
    } else if (key == "generator" || key == "n" || key == "seed" || key == "model" || key == "shift" ||
               key == "train_n") {
      throw ConfigError("generator spec: '" + key + "' has the wrong type", key);
    } else {
      throw ConfigError("generator spec: unknown key '" + key + "'", key);
    }
  }
  if (s.generator.empty()) throw ConfigError("generator spec: missing 'generator'", "generator");
  return s;
}

namespace {

enum : std::uint64_t { kCohortDraw = 101, kTrainDraw = 102, kNoiseDraw = 103 };

double clamp_to(const FeatureSchema& f, double v) { return std::clamp(v, f.range_min, f.range_max); }

// Cluster centres sit at +-c along (1,-1,1,-1)/2, orthogonal to the all-ones
// direction the outputs depend on.
Matrix two_gaussians(const Schema& schema, std::size_t n, double spread, Rng& rng) {
  constexpr double kCentre = 1.0;
  const double v[4] = {0.5, -0.5, 0.5, -0.5};
  std::normal_distribution<double> noise(0.0, spread);
  std::bernoulli_distribution side(0.5);
  Matrix x(n, 4);
  for (std::size_t i = 0; i < n; ++i) {
    const double sign = side(rng) ? 1.0 : -1.0;
    for (std::size_t p = 0; p < 4; ++p) x(i, p) = clamp_to(schema[p], sign * kCentre * v[p] + noise(rng));
  }
  return x;
}

double linear_truth(std::span<const double> row) { return row[0] + row[1] + row[2] + row[3]; }

Matrix mixed_rows(const Schema& schema, std::size_t n, double widen, Rng& rng) {
  std::uniform_real_distribution<double> age(2.0, 6.5);
  std::normal_distribution<double> income(3.0, 1.0 * widen);
  std::normal_distribution<double> hours(4.0, 1.0 * widen);
  std::discrete_distribution<int> education({4, 3, 2, 1});
  std::uniform_int_distribution<int> region(0, 2);
  Matrix x(n, 5);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = clamp_to(schema[0], age(rng));
    x(i, 1) = clamp_to(schema[1], income(rng));
    x(i, 2) = clamp_to(schema[2], hours(rng));
    x(i, 3) = education(rng);
    x(i, 4) = region(rng);
  }
  return x;
}

double mixed_truth(std::span<const double> row) {
  static const double kEducation[4] = {0.0, 0.3, 0.6, 0.9};
  static const double kRegion[3] = {0.0, 0.2, -0.1};
  return 0.25 * row[1] + (row[2] > 4.0 ? 0.4 : 0.0) + kEducation[static_cast<int>(row[3])] +
         0.1 * (row[0] - 4.0) + kRegion[static_cast<int>(row[4])];
}

nlohmann::json quickstart(std::uint64_t seed, double u_x, double u_y) {
  return {{"data", {{"factual", "data.csv"}, {"schema", "schema.json"}}},
          {"predictor", {{"path", "predictor.json"}}},
          {"target", {{"values", "target.csv"}}},
          {"solver",
           {{"u_x", u_x},
            {"u_y", u_y},
            {"k", 10},
            {"h", 3},
            {"candidates", 32},
            {"iterations", 200},
            {"optimizer", "monte_carlo"},
            {"phi", std::numbers::pi},
            {"seed", seed}}},
          {"output", {{"directory", "out"}}}};
}

}  // namespace

SynthOutput synthesize(const SynthSpec& spec) {
  if (spec.n < 10) throw ConfigError("generators need n >= 10 (got " + std::to_string(spec.n) + ")", "n");
  if (spec.train_n < 10) throw ConfigError("train_n must be at least 10", "train_n");

  std::shared_ptr<const Schema> schema;
  Matrix cohort, train;
  std::vector<double> labels;
  std::string model_kind;
  double shift = 0.0;
  double u_x = 0.5, u_y = 0.05;
  Rng cohort_rng = make_stream(spec.seed, {kCohortDraw});
  Rng train_rng = make_stream(spec.seed, {kTrainDraw});
  Rng noise_rng = make_stream(spec.seed, {kNoiseDraw});
  std::normal_distribution<double> label_noise(0.0, 0.05);

  if (spec.generator == "two-gaussians-linear") {
    std::vector<FeatureSchema> f;
    for (int p = 1; p <= 4; ++p) f.push_back(numerical_feature("x" + std::to_string(p), -3.0, 3.0));
    schema = std::make_shared<const Schema>(std::move(f));
    cohort = two_gaussians(*schema, spec.n, 0.1, cohort_rng);
    // Wider training cloud, covering where edited rows land.
    train = two_gaussians(*schema, spec.train_n, 0.6, train_rng);
    for (std::size_t i = 0; i < train.rows; ++i) labels.push_back(linear_truth(train.row(i)) + label_noise(noise_rng));
    model_kind = spec.model.value_or("linear");
    shift = spec.shift.value_or(1.0);
  } else if (spec.generator == "mixed-type-stumps") {
    schema = std::make_shared<const Schema>(std::vector<FeatureSchema>{
        numerical_feature("age", 1.8, 7.0, true),
        numerical_feature("income", 0.0, 10.0),
        numerical_feature("hours", 0.0, 8.0),
        categorical_feature("education", {"school", "college", "bachelor", "master"}),
        categorical_feature("region", {"north", "south", "east"}, true),
    });
    cohort = mixed_rows(*schema, spec.n, 1.0, cohort_rng);
    train = mixed_rows(*schema, spec.train_n, 2.0, train_rng);
    for (std::size_t i = 0; i < train.rows; ++i) labels.push_back(mixed_truth(train.row(i)) + label_noise(noise_rng));
    model_kind = spec.model.value_or("stump_ensemble");
    shift = spec.shift.value_or(0.5);
    // UCLs at X' itself are about 0.33 (inputs) and 0.065 (outputs).
    u_x = 1.0;
    u_y = 0.15;
  } else {
    throw ConfigError("unknown generator '" + spec.generator + "' (expected two-gaussians-linear or mixed-type-stumps)",
                      "generator");
  }

  BuiltinKind kind;
  try {
    kind = parse_builtin_kind(model_kind);
  } catch (const ConfigError& e) {
    throw ConfigError(e.what(), "model");
  }
  auto model = fit_builtin(kind, train, labels, spec.seed);
  CohortMatrix factual(schema, std::move(cohort));
  auto target = checked_predict(*model, factual.values());
  for (double& y : target) y += shift;
  return {std::move(factual), std::move(model), std::move(target), quickstart(spec.seed, u_x, u_y)};
}

void write_synthetic(const SynthOutput& out, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  decode_csv(out.cohort, dir / "data.csv");
  out.cohort.schema().save(dir / "schema.json");
  save_column(out.target, "target", dir / "target.csv");
  auto write_json = [&](const nlohmann::json& doc, const char* name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw IoError("cannot write " + (dir / name).string());
    f << doc.dump(2) << '\n';
  };
  write_json(out.model->to_json(), "predictor.json");
  write_json(out.quickstart, "config.json");
}

}  // namespace discover
