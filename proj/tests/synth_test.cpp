#include <gtest/gtest.h>

#include <functional>

#include "discover/error.hpp"
#include "discover/solver.hpp"
#include "discover/synth.hpp"
#include "helpers.hpp"

using namespace discover;
using namespace testing_support;

namespace {

SynthSpec spec_for(const std::string& generator, std::size_t n = 100) {
  SynthSpec s;
  s.generator = generator;
  s.n = n;
  s.train_n = 500;
  return s;
}

}  // namespace

TEST(Synth, DeterministicPerSeed) {
  for (const char* gen : {"two-gaussians-linear", "mixed-type-stumps"}) {
    const auto a = synthesize(spec_for(gen));
    const auto b = synthesize(spec_for(gen));
    EXPECT_EQ(to_csv(a.cohort), to_csv(b.cohort));
    EXPECT_EQ(a.target, b.target);
    EXPECT_EQ(a.model->to_json(), b.model->to_json());
    auto other = spec_for(gen);
    other.seed = 8;
    EXPECT_NE(to_csv(synthesize(other).cohort), to_csv(a.cohort));
  }
}

TEST(Synth, WrittenFilesAreStable) {
  TempDir a, b;
  write_synthetic(synthesize(spec_for("mixed-type-stumps")), a.path());
  write_synthetic(synthesize(spec_for("mixed-type-stumps")), b.path());
  for (const char* f : {"data.csv", "schema.json", "target.csv", "predictor.json", "config.json"}) {
    ASSERT_TRUE(std::filesystem::exists(a / f)) << f;
    EXPECT_EQ(std::hash<std::string>{}(read_file(a / f)), std::hash<std::string>{}(read_file(b / f))) << f;
  }
  const auto schema = std::make_shared<const Schema>(Schema::load(a / "schema.json"));
  EXPECT_EQ(load_csv(a / "data.csv", schema).row_count(), 100u);
  EXPECT_EQ(load_column(a / "target.csv").size(), 100u);
}

TEST(Synth, LinearTaskShape) {
  const auto out = synthesize(spec_for("two-gaussians-linear"));
  EXPECT_EQ(out.cohort.dim(), 4u);
  EXPECT_EQ(out.cohort.schema().categorical_count(), 0u);
  EXPECT_NE(dynamic_cast<const LinearModel*>(out.model.get()), nullptr);
  const auto y = out.model->predict(out.cohort.values());
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(out.target[i] - y[i], 1.0, 1e-12);
}

TEST(Synth, MixedTaskHasRichCategoricals) {
  const auto out = synthesize(spec_for("mixed-type-stumps"));
  const auto& schema = out.cohort.schema();
  bool rich = false, immutable = false;
  for (const auto& f : schema.features()) {
    rich = rich || (f.categorical() && f.cardinality() >= 3 && !f.immutable);
    immutable = immutable || f.immutable;
  }
  EXPECT_TRUE(rich);
  EXPECT_TRUE(immutable);
  EXPECT_NE(dynamic_cast<const StumpEnsemble*>(out.model.get()), nullptr);
  auto linear = spec_for("mixed-type-stumps");
  linear.model = "linear";
  EXPECT_NE(dynamic_cast<const LinearModel*>(synthesize(linear).model.get()), nullptr);
}

TEST(Synth, RejectsBadSpecs) {
  EXPECT_THROW(synthesize(spec_for("two-gaussians-linear", 0)), ConfigError);
  EXPECT_THROW(synthesize(spec_for("three-gaussians")), ConfigError);
  auto bad_model = spec_for("two-gaussians-linear");
  bad_model.model = "forest";
  EXPECT_THROW(synthesize(bad_model), ConfigError);
  EXPECT_THROW(SynthSpec::from_json({{"generator", "two-gaussians-linear"}, {"rows", 5}}), ConfigError);
  EXPECT_THROW(SynthSpec::from_json({{"n", 5}}), ConfigError);
  const auto s = SynthSpec::from_json({{"generator", "mixed-type-stumps"}, {"n", 40}, {"shift", 0.25}});
  EXPECT_EQ(s.n, 40u);
  EXPECT_EQ(s.shift, 0.25);
}

TEST(Synth, QuickstartConfigParses) {
  const auto out = synthesize(spec_for("two-gaussians-linear"));
  const auto& q = out.quickstart;
  EXPECT_EQ(q.at("data").at("factual"), "data.csv");
  EXPECT_EQ(q.at("solver").at("k"), 10);
  EXPECT_NO_THROW(SolverConfig::from_json(q.at("solver")));
}
