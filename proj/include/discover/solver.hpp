#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "discover/objective.hpp"
#include "discover/predict.hpp"
#include "discover/projection.hpp"
#include "discover/proposals.hpp"
#include "discover/tabular.hpp"
#include "discover/transport.hpp"
#include "json.hpp"

namespace discover {

enum class OptimizerKind { kMonteCarlo, kGenetic };

OptimizerKind parse_optimizer(const std::string& name);
std::string to_string(OptimizerKind kind);

struct SolverConfig {
  double u_x = 0.5;  // bound on the input-side UCL (squared cost units)
  double u_y = 0.05;
  double alpha = 0.1;
  double delta = 0.05;
  std::size_t projections = 100;
  std::size_t k = 1;
  std::size_t h = 3;
  std::size_t candidates = 32;   // M, proposals per iteration besides the no-op
  std::size_t iterations = 100;  // T
  OptimizerKind optimizer = OptimizerKind::kMonteCarlo;
  ConeParams cone;
  double kappa = 0.1;
  double eta0 = 0.5;
  std::uint64_t seed = 0;
  std::size_t grid_size = 100;
  bool ucl_square_integrand = true;
  bool per_feature_lambda = false;
  double mutation_rate = 0.3;
  std::size_t elite_size = 4;
  bool stop_when_certified = false;

  UclOptions ucl() const { return {delta, alpha, grid_size, ucl_square_integrand}; }
  ProposalOptions proposal() const { return {cone, h, per_feature_lambda, mutation_rate, elite_size}; }

  nlohmann::json to_json() const;
  // Missing keys keep their defaults; unknown keys are rejected.
  static SolverConfig from_json(const nlohmann::json& doc);
};

// Throws ConfigError. `rows` is the cohort size (k must not exceed it).
void validate(const SolverConfig& config, std::size_t rows);

struct IterationRecord {
  std::size_t iteration = 0;
  double q = 0.0;  // Q(X_t; eta_t)
  double q_x = 0.0;
  double q_y = 0.0;
  double ucl_sw = 0.0;
  double ucl_w = 0.0;
  double eta = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool feasible = false;
  std::vector<std::size_t> selected_rows;
  std::size_t chosen_candidate = 0;
  std::size_t rows_edited = 0;
  double q_selected = 0.0;  // Q(X_{t+1}; eta_t)
};

struct CertifyResult {
  bool feasible = false;
  double ucl_sw = 0.0;
  double ucl_w = 0.0;
};

CertifyResult certify(const Matrix& x, const Matrix& xp, std::span<const double> ystar, const Predictor& model,
                      const ProjectionSet& dirs, const UclOptions& options, double u_x, double u_y);

struct SolveReport {
  std::optional<CohortMatrix> cohort;  // present iff certified
  bool certified = false;
  std::size_t iterations_run = 0;
  std::size_t returned_iteration = 0;  // index t of the iterate X_t that was certified or last
  std::vector<IterationRecord> trajectory;
  CertifyResult final_check;  // for the returned (or last) iterate
  double final_q_x = 0.0;
  double final_q_y = 0.0;
  Matrix last_iterate;
  SolverConfig config;
};

// Cached state of the current iterate: projections of every row, predictor
// outputs, and the sorted factual side. Candidate scoring reuses the caches
// and only needs the predictor outputs of edited rows.
class ObjectiveEngine {
 public:
  ObjectiveEngine(const Matrix& factual, std::span<const double> ystar, ProjectionSet dirs, UclOptions ucl);

  struct Snapshot {
    double q_x = 0.0;
    double q_y = 0.0;
    double ucl_sw = 0.0;
    double ucl_w = 0.0;
    PlanTable plans;
    std::vector<std::size_t> output_plan;
  };

  void reset(const Matrix& x, const Predictor& model);
  Snapshot evaluate() const;

  // (Q_x, Q_y) of the current iterate with `candidate` applied. `outputs[j]`
  // is the predictor output for candidate.edits[j].
  std::pair<double, double> candidate_costs(const Candidate& candidate, std::span<const double> outputs) const;
  void apply(const Candidate& candidate, std::span<const double> outputs);

  const Matrix& current() const { return x_; }
  const std::vector<double>& outputs() const { return y_; }
  const Projected& projected() const { return px_; }
  const Projected& factual_projected() const { return pxp_; }
  const ProjectionSet& directions() const { return dirs_; }
  std::span<const double> target() const { return ystar_; }

 private:
  Matrix xp_;
  std::vector<double> ystar_;
  std::vector<double> ystar_sorted_;
  ProjectionSet dirs_;
  UclOptions ucl_;
  Projected pxp_;
  Projected pxp_sorted_;
  Matrix x_;
  Projected px_;
  Projected px_sorted_;
  std::vector<std::uint32_t> px_rank_;  // position of row i in sorted slice k, at [k*n + i]
  std::vector<double> y_;
  std::vector<double> y_sorted_;
  std::vector<std::size_t> y_rank_;

  void refresh_order();
};

// Observation hook for tests and tooling: called after each step with the
// iterate before and after selection.
struct StepTrace {
  const Matrix& before;
  const Matrix& after;
  const IterationRecord& record;
};
using StepObserver = std::function<void(const StepTrace&)>;

class Solver {
 public:
  Solver(const CohortMatrix& factual, std::span<const double> ystar, PredictorPtr model, SolverConfig config);

  // One propose-and-select iteration.
  IterationRecord step();

  SolveReport run(const StepObserver& observer = {});

  const Matrix& current() const { return engine_.current(); }
  const EtaState& eta_state() const { return eta_; }
  const Elite& elite() const { return elite_; }
  const ProjectionSet& directions() const { return engine_.directions(); }
  const EmbeddingTables& embeddings() const { return tables_; }
  const ObjectiveEngine& engine() const { return engine_; }
  // Q of the current iterate at weight eta (for tests).
  double objective(double eta) const;

 private:
  CohortMatrix factual_;
  std::vector<double> ystar_;
  PredictorPtr model_;
  SolverConfig config_;
  ObjectiveEngine engine_;
  EmbeddingTables tables_;
  EtaState eta_;
  Elite elite_;
  std::size_t iteration_ = 0;
  std::optional<ObjectiveEngine::Snapshot> snapshot_;
};

SolveReport solve(const CohortMatrix& factual, std::span<const double> ystar, PredictorPtr model,
                  const SolverConfig& config, const StepObserver& observer = {});

// iteration,Q,Q_x,Q_y,ucl_sw,ucl_w,eta,l,r,feasible,k_edited,chosen_candidate,Q_selected
std::string trajectory_csv(const std::vector<IterationRecord>& trajectory);

}  // namespace discover
