#include <gtest/gtest.h>

#include <random>

#include "discover/error.hpp"
#include "discover/kernels.hpp"
#include "discover/solver.hpp"
#include "discover/synth.hpp"
#include "helpers.hpp"

using namespace discover;
using namespace testing_support;

namespace {

SynthOutput task(const std::string& generator, std::size_t n = 80, std::uint64_t seed = 7) {
  SynthSpec spec;
  spec.generator = generator;
  spec.n = n;
  spec.seed = seed;
  spec.train_n = 400;
  return synthesize(spec);
}

SolverConfig small_config(std::uint64_t seed = 1) {
  SolverConfig c;
  c.k = 5;
  c.h = 2;
  c.candidates = 12;
  c.iterations = 30;
  c.projections = 30;
  c.seed = seed;
  return c;
}

// Q_x and Q_y computed without any solver caches.
std::pair<double, double> scratch_costs(const Matrix& x, const Matrix& xp, const ProjectionSet& dirs,
                                        const Predictor& model, std::span<const double> ystar) {
  const auto y = model.predict(x);
  return {sliced_cost(x, xp, dirs), sorted_cost(y, {ystar.begin(), ystar.end()})};
}

bool rel_close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(std::abs(b), 1e-12); }

}  // namespace

TEST(Solver, IncrementalCostsMatchFromScratch) {
  const auto t = task("two-gaussians-linear", 60);
  const auto& xp = t.cohort.values();
  const auto dirs = sample_projections(xp.cols, 25, 4);
  ObjectiveEngine engine(xp, t.target, dirs, UclOptions{});
  engine.reset(xp, *t.model);
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> row(0, xp.rows - 1), count(1, 6);
  std::uniform_real_distribution<double> cell(-3, 3);
  for (int step = 0; step < 100; ++step) {
    Candidate cand;
    const std::size_t m = count(rng);
    std::vector<std::size_t> used;
    while (cand.edits.size() < m) {
      const std::size_t r = row(rng);
      if (std::find(used.begin(), used.end(), r) != used.end()) continue;
      used.push_back(r);
      RowEdit e{r, {}};
      const auto cur = engine.current().row(r);
      e.values.assign(cur.begin(), cur.end());
      e.values[static_cast<std::size_t>(step) % xp.cols] = cell(rng);
      cand.edits.push_back(std::move(e));
    }
    Matrix rows(m, xp.cols);
    Matrix next = engine.current();
    for (std::size_t j = 0; j < m; ++j) {
      std::copy(cand.edits[j].values.begin(), cand.edits[j].values.end(), rows.row(j).begin());
      std::copy(cand.edits[j].values.begin(), cand.edits[j].values.end(), next.row(cand.edits[j].row).begin());
    }
    const auto outputs = t.model->predict(rows);
    const auto [cx, cy] = engine.candidate_costs(cand, outputs);
    const auto [sx, sy] = scratch_costs(next, xp, dirs, *t.model, t.target);
    EXPECT_TRUE(rel_close(cx, sx, 1e-10)) << step << ": " << cx << " vs " << sx;
    EXPECT_TRUE(rel_close(cy, sy, 1e-10)) << step << ": " << cy << " vs " << sy;
    engine.apply(cand, outputs);
    ASSERT_EQ(engine.current(), next);
    const auto snap = engine.evaluate();
    EXPECT_TRUE(rel_close(snap.q_x, sx, 1e-10));
    EXPECT_TRUE(rel_close(snap.q_y, sy, 1e-10));
  }
  EXPECT_THROW(engine.candidate_costs(Candidate{{RowEdit{0, std::vector<double>(xp.cols)}}}, {}), ArgumentError);
}

TEST(Solver, NoOpCandidateCostsCurrentObjective) {
  const auto t = task("mixed-type-stumps", 50);
  const auto dirs = sample_projections(t.cohort.dim(), 20, 1);
  ObjectiveEngine engine(t.cohort.values(), t.target, dirs, UclOptions{});
  engine.reset(t.cohort.values(), *t.model);
  const auto snap = engine.evaluate();
  const auto [cx, cy] = engine.candidate_costs(Candidate{}, {});
  EXPECT_EQ(cx, snap.q_x);
  EXPECT_EQ(cy, snap.q_y);
  EXPECT_EQ(snap.q_x, 0.0);
}

TEST(Solver, SelectedObjectiveNeverIncreases) {
  for (const char* gen : {"two-gaussians-linear", "mixed-type-stumps"}) {
    for (auto opt : {OptimizerKind::kMonteCarlo, OptimizerKind::kGenetic}) {
      const auto t = task(gen);
      auto c = small_config(3);
      c.optimizer = opt;
      const auto dirs = sample_projections(t.cohort.dim(), c.projections, c.seed);
      const auto report = solve(t.cohort, t.target, t.model, c, [&](const StepTrace& s) {
        const auto [bx, by] = scratch_costs(s.before, t.cohort.values(), dirs, *t.model, t.target);
        const auto [ax, ay] = scratch_costs(s.after, t.cohort.values(), dirs, *t.model, t.target);
        const double eta = s.record.eta;
        const double before = (1 - eta) * bx + eta * by;
        const double after = (1 - eta) * ax + eta * ay;
        EXPECT_LE(after, before + 1e-12) << gen << " t=" << s.record.iteration;
        EXPECT_TRUE(rel_close(s.record.q, before, 1e-10));
        EXPECT_TRUE(rel_close(s.record.q_selected, after, 1e-10));
      });
      EXPECT_EQ(report.trajectory.size(), c.iterations);
    }
  }
}

TEST(Solver, NoOpWinsWhenEveryCandidateIsWorse) {
  // At X = X' with y* = b(X') the objective is zero; nothing can beat the no-op.
  const auto t = task("two-gaussians-linear", 40);
  const auto ystar = t.model->predict(t.cohort.values());
  Solver solver(t.cohort, ystar, t.model, small_config());
  for (int i = 0; i < 10; ++i) {
    const auto rec = solver.step();
    EXPECT_EQ(rec.chosen_candidate, 0u);
    EXPECT_EQ(rec.rows_edited, 0u);
    EXPECT_EQ(rec.q, 0.0);
    EXPECT_EQ(solver.current(), t.cohort.values());
  }
}

TEST(Solver, SparsityAndImmutables) {
  const auto t = task("mixed-type-stumps");
  const auto& schema = t.cohort.schema();
  for (auto opt : {OptimizerKind::kMonteCarlo, OptimizerKind::kGenetic}) {
    auto c = small_config(5);
    c.optimizer = opt;
    solve(t.cohort, t.target, t.model, c, [&](const StepTrace& s) {
      std::size_t rows_changed = 0;
      for (std::size_t i = 0; i < s.before.rows; ++i) {
        std::size_t changed = 0;
        for (std::size_t p = 0; p < s.before.cols; ++p) {
          if (s.before(i, p) == s.after(i, p)) continue;
          ++changed;
          EXPECT_FALSE(schema[p].immutable) << schema[p].name;
        }
        EXPECT_LE(changed, c.h);
        rows_changed += changed > 0;
        if (changed > 0) {
          EXPECT_NE(std::find(s.record.selected_rows.begin(), s.record.selected_rows.end(), i),
                    s.record.selected_rows.end());
        }
        EXPECT_NO_THROW(validate_row(schema, s.after.row(i), i + 1));
      }
      EXPECT_LE(rows_changed, c.k);
      EXPECT_EQ(rows_changed, s.record.rows_edited);
    });
  }
}

TEST(Solver, FeasibilityFlagsMatchBounds) {
  const auto t = task("two-gaussians-linear");
  auto c = small_config();
  c.u_x = 0.6;
  c.u_y = 0.6;
  const auto report = solve(t.cohort, t.target, t.model, c);
  for (const auto& r : report.trajectory) {
    EXPECT_EQ(r.feasible, r.ucl_sw <= c.u_x && r.ucl_w <= c.u_y);
    EXPECT_GE(r.eta, r.lower);
    EXPECT_LE(r.eta, r.upper);
    EXPECT_NEAR(r.q, (1 - r.eta) * r.q_x + r.eta * r.q_y, 1e-12);
  }
  if (report.certified) {
    ASSERT_TRUE(report.cohort.has_value());
    const auto dirs = sample_projections(t.cohort.dim(), c.projections, c.seed);
    const auto check =
        certify(report.cohort->values(), t.cohort.values(), t.target, *t.model, dirs, c.ucl(), c.u_x, c.u_y);
    EXPECT_TRUE(check.feasible);
    EXPECT_NEAR(check.ucl_sw, report.final_check.ucl_sw, 1e-12);
  } else {
    EXPECT_FALSE(report.cohort.has_value());
  }
}

TEST(Solver, GenerousBoundsCertifyImmediately) {
  const auto t = task("two-gaussians-linear", 50);
  const auto ystar = t.model->predict(t.cohort.values());
  auto c = small_config();
  c.u_x = 100.0;
  c.u_y = 100.0;
  c.iterations = 3;
  const auto report = solve(t.cohort, ystar, t.model, c);
  EXPECT_TRUE(report.certified);
  EXPECT_TRUE(report.trajectory.at(0).feasible);
  ASSERT_TRUE(report.cohort.has_value());
}

TEST(Solver, ZeroOutputBoundNeverCertifies) {
  const auto t = task("two-gaussians-linear", 50);
  auto c = small_config();
  c.u_y = 0.0;
  const auto report = solve(t.cohort, t.target, t.model, c);
  EXPECT_FALSE(report.certified);
  EXPECT_FALSE(report.cohort.has_value());
  EXPECT_EQ(report.returned_iteration, report.iterations_run);
  for (const auto& r : report.trajectory) EXPECT_FALSE(r.feasible);
}

TEST(Solver, CertifyIsMonotoneInBounds) {
  std::mt19937_64 rng(2);
  const LinearModel model({1.0, -1.0}, 0.0);
  std::uniform_real_distribution<double> u(0, 2);
  for (int t = 0; t < 100; ++t) {
    const auto x = random_matrix(30, 2, rng);
    const auto xp = random_matrix(30, 2, rng, -0.5, 1.5);
    const auto ystar = random_vector(30, rng);
    const auto dirs = sample_projections(2, 10, static_cast<std::uint64_t>(t));
    const double ux = u(rng), uy = u(rng);
    const auto a = certify(x, xp, ystar, model, dirs, {}, ux, uy);
    const auto b = certify(x, xp, ystar, model, dirs, {}, ux + 0.5, uy + 0.5);
    if (a.feasible) EXPECT_TRUE(b.feasible);
    EXPECT_EQ(a.ucl_sw, b.ucl_sw);
  }
}

TEST(Solver, DeterministicAndThreadIndependent) {
  const auto t = task("mixed-type-stumps");
  for (auto opt : {OptimizerKind::kMonteCarlo, OptimizerKind::kGenetic}) {
    auto c = small_config(9);
    c.optimizer = opt;
    const int saved = kernels::thread_count();
    kernels::set_thread_count(1);
    const auto a = solve(t.cohort, t.target, t.model, c);
    kernels::set_thread_count(4);
    const auto b = solve(t.cohort, t.target, t.model, c);
    kernels::set_thread_count(saved);
    EXPECT_EQ(trajectory_csv(a.trajectory), trajectory_csv(b.trajectory));
    EXPECT_EQ(a.last_iterate, b.last_iterate);
    c.seed = 10;
    const auto other = solve(t.cohort, t.target, t.model, c);
    EXPECT_NE(trajectory_csv(a.trajectory), trajectory_csv(other.trajectory));
  }
}

TEST(Solver, OnePredictorCallPerStepForEditedRowsOnly) {
  const auto t = task("two-gaussians-linear", 60);
  const auto counting = std::make_shared<CountingPredictor>(t.model);
  auto c = small_config();
  Solver solver(t.cohort, t.target, counting, c);
  EXPECT_EQ(counting->calls, 1u);
  EXPECT_EQ(counting->rows_seen, 60u);
  for (std::size_t i = 0; i < 10; ++i) {
    const auto before_rows = counting->rows_seen;
    solver.step();
    EXPECT_EQ(counting->calls, 2 + i);
    EXPECT_LE(counting->rows_seen - before_rows, c.candidates * c.k);
  }
}

TEST(Solver, TrajectoryCsvLayout) {
  const auto t = task("two-gaussians-linear", 30);
  auto c = small_config();
  c.iterations = 4;
  const auto csv = trajectory_csv(solve(t.cohort, t.target, t.model, c).trajectory);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "iteration,Q,Q_x,Q_y,ucl_sw,ucl_w,eta,l,r,feasible,k_edited,chosen_candidate,Q_selected");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_EQ(csv.find("\n0,"), csv.find('\n'));
}

TEST(Solver, ConfigValidation) {
  SolverConfig c;
  EXPECT_NO_THROW(validate(c, 10));
  auto expect_key = [](SolverConfig bad, std::size_t rows, const std::string& key) {
    try {
      validate(bad, rows);
      ADD_FAILURE() << "expected failure for " << key;
    } catch (const ConfigError& e) {
      EXPECT_EQ(e.key(), key) << e.what();
    }
  };
  auto k = c;
  k.k = 11;
  expect_key(k, 10, "k");
  k.k = 0;
  expect_key(k, 10, "k");
  auto ux = c;
  ux.u_x = -1;
  expect_key(ux, 10, "u_x");
  auto alpha = c;
  alpha.alpha = 1.0;
  expect_key(alpha, 10, "alpha");
  auto phi = c;
  phi.cone.phi = 4.0;
  expect_key(phi, 10, "phi");
  auto proj = c;
  proj.projections = 0;
  expect_key(proj, 10, "projections");

  const auto t = task("two-gaussians-linear", 20);
  auto big = small_config();
  big.k = 21;
  EXPECT_THROW(Solver(t.cohort, t.target, t.model, big), ConfigError);
}

TEST(Solver, ConfigJson) {
  SolverConfig c;
  c.k = 7;
  c.optimizer = OptimizerKind::kGenetic;
  c.cone.phi = 1.0;
  const auto back = SolverConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_THROW(SolverConfig::from_json({{"kk", 1}}), ConfigError);
  EXPECT_THROW(SolverConfig::from_json({{"k", -1}}), ConfigError);
  EXPECT_THROW(SolverConfig::from_json({{"k", "3"}}), ConfigError);
  EXPECT_THROW(SolverConfig::from_json({{"optimizer", "annealing"}}), ConfigError);
  EXPECT_EQ(SolverConfig::from_json({{"optimizer", "ga"}}).optimizer, OptimizerKind::kGenetic);
}
