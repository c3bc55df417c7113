#include <gtest/gtest.h>

#include "discover/config.hpp"
#include "discover/error.hpp"
#include "helpers.hpp"

using namespace discover;
using namespace testing_support;

namespace {

const char* kValid = R"({
  "data": {"factual": "data.csv", "schema": "schema.json"},
  "predictor": {"kind": "linear", "weights": [1, 2], "intercept": 0},
  "target": {"transform": "shift", "amount": 1.0},
  "solver": {
    "k": 4,
    "h": 2
  },
  "output": {"directory": "out"}
})";

std::string with(std::string text, const std::string& from, const std::string& to) {
  const auto at = text.find(from);
  if (at == std::string::npos) throw std::logic_error("fixture text not found: " + from);
  return text.replace(at, from.size(), to);
}

std::string error_of(const std::string& text) {
  try {
    parse_run_config(text, "/base", "run.json");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, ParsesAndResolvesPaths) {
  const auto c = parse_run_config(kValid, "/base", "run.json");
  EXPECT_EQ(c.factual, std::filesystem::path("/base/data.csv"));
  EXPECT_EQ(c.schema_path, std::filesystem::path("/base/schema.json"));
  EXPECT_EQ(c.output_dir, std::filesystem::path("/base/out"));
  EXPECT_EQ(c.solver.k, 4u);
  EXPECT_EQ(c.solver.h, 2u);
  EXPECT_EQ(c.solver.candidates, SolverConfig{}.candidates);
  EXPECT_EQ(c.target.transform, TargetTransform::kShift);
  EXPECT_EQ(c.target.amount, 1.0);
  const auto abs = parse_run_config(with(kValid, "\"data.csv\"", "\"/abs/x.csv\""), "/base");
  EXPECT_EQ(abs.factual, std::filesystem::path("/abs/x.csv"));
}

TEST(Config, ResolvedJsonIncludesDefaults) {
  const auto j = parse_run_config(kValid, "/base").to_json();
  EXPECT_EQ(j.at("solver").at("k"), 4);
  EXPECT_TRUE(j.at("solver").contains("alpha"));
  EXPECT_EQ(j.at("data").at("factual"), "/base/data.csv");
  EXPECT_EQ(j.at("target").at("transform"), "shift");
}

TEST(Config, ErrorsCarryFileAndLine) {
  EXPECT_EQ(error_of(with(kValid, "\"k\": 4", "\"k\": 0")), "run.json:6: k must be at least 1");
  EXPECT_NE(error_of(with(kValid, "\"h\": 2", "\"h\": 2, \"hh\": 1")).find("run.json:7: unknown solver setting 'hh'"),
            std::string::npos);
  EXPECT_NE(error_of(with(kValid, "\"amount\": 1.0", "\"amount\": 1.0, \"extra\": 1")).find("run.json:4:"),
            std::string::npos);
  EXPECT_NE(error_of(with(kValid, "\"shift\"", "\"double\"")).find("run.json:4: unknown target transform"),
            std::string::npos);
  EXPECT_NE(error_of(with(kValid, "\"k\": 4", "\"k\": \"four\"")).find("run.json:6:"), std::string::npos);
  const std::string top = error_of(with(kValid, "\"output\"", "\"outputs\""));
  EXPECT_NE(top.find("unknown key"), std::string::npos) << top;
  EXPECT_NE(top.find("run.json:9:"), std::string::npos) << top;
}

TEST(Config, InvalidJsonPointsAtLine) {
  const std::string msg = error_of(with(kValid, "\"h\": 2", "\"h\": 2,,"));
  EXPECT_EQ(msg.rfind("run.json:7: invalid JSON", 0), 0u) << msg;
}

TEST(Config, MissingSections) {
  EXPECT_NE(error_of(R"({"data": {"factual": "a", "schema": "b"}})").find("missing required section 'predictor'"),
            std::string::npos);
  EXPECT_NE(error_of(with(kValid, R"("target": {"transform": "shift", "amount": 1.0})", R"("target": {})"))
                .find("target needs"),
            std::string::npos);
  EXPECT_NE(error_of(with(kValid, "\"amount\": 1.0", "\"amount\": \"x\"")).find("target.amount"), std::string::npos);
  EXPECT_NE(error_of("[]").find("top level"), std::string::npos);
}

TEST(Config, LocateKey) {
  const std::string text = "{\n \"a\": {\n  \"k\": 1\n },\n \"b\": {\n  \"k\": 2\n }\n}";
  EXPECT_EQ(locate_key(text, "a.k"), 3u);
  EXPECT_EQ(locate_key(text, "b.k"), 6u);
  EXPECT_EQ(locate_key(text, "b"), 5u);
  EXPECT_EQ(locate_key(text, "c"), 0u);
  // A string value equal to a key name is not a key.
  EXPECT_EQ(locate_key("{\"x\": \"k\",\n\"k\": 1}", "k"), 2u);
}

TEST(Config, InlineSchemaAndPredictorFile) {
  TempDir dir;
  write_file(dir / "model.json", R"({"kind": "linear", "weights": [3], "intercept": 1})");
  const std::string text = R"({
    "data": {"factual": "d.csv", "schema": [{"name": "x", "kind": "numerical", "range": [0, 1]}]},
    "predictor": {"path": "model.json"},
    "target": {"values": "t.csv"},
    "solver": {},
    "output": {"directory": "."}
  })";
  const auto c = parse_run_config(text, dir.path());
  ASSERT_TRUE(c.schema_inline.has_value());
  EXPECT_EQ(c.predictor.at("kind"), "linear");
  EXPECT_EQ(c.predictor.at("weights")[0], 3);
  EXPECT_EQ(c.target.values, dir / "t.csv");

  write_file(dir / "run.json", text);
  EXPECT_EQ(load_run_config(dir / "run.json").predictor, c.predictor);
  EXPECT_THROW(load_run_config(dir / "absent.json"), ConfigError);
  EXPECT_THROW(parse_run_config(with(text, "model.json", "missing.json"), dir.path()), IoError);
}

TEST(Config, ExternalPredictorSpec) {
  auto text = with(kValid, R"({"kind": "linear", "weights": [1, 2], "intercept": 0})",
                   R"({"external": ["python3", "m.py"], "timeout_s": 5, "pool": 2})");
  const auto c = parse_run_config(text, "/base");
  EXPECT_EQ(c.predictor.at("external")[1], "m.py");
  EXPECT_NE(error_of(with(text, "\"pool\": 2", "\"pool\": 0")).find("predictor.pool"), std::string::npos);
  EXPECT_NE(error_of(with(text, "\"timeout_s\": 5", "\"timeout_s\": -1")).find("timeout_s"), std::string::npos);
}

TEST(Config, TargetTransforms) {
  const std::vector<double> y{1, 2, 3};
  EXPECT_EQ(resolve_target({}, y), y);
  EXPECT_EQ(resolve_target({std::nullopt, TargetTransform::kShift, 0.5}, y), (std::vector<double>{1.5, 2.5, 3.5}));
  EXPECT_EQ(resolve_target({std::nullopt, TargetTransform::kScaleToMean, 4.0}, y), (std::vector<double>{2, 4, 6}));
  EXPECT_THROW(resolve_target({std::nullopt, TargetTransform::kScaleToMean, 1.0}, std::vector<double>{-1, 1}),
               ArgumentError);
  TempDir dir;
  write_file(dir / "t.csv", "target\n5\n6\n7\n");
  // Explicit values win over a transform.
  EXPECT_EQ(resolve_target({dir / "t.csv", TargetTransform::kShift, 100.0}, y), (std::vector<double>{5, 6, 7}));
  EXPECT_THROW(resolve_target({dir / "t.csv"}, std::vector<double>{1, 2}), ArgumentError);
}
