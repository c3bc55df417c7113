#include "discover/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "discover/error.hpp"
#include "discover/kernels.hpp"
#include "kernel_detail.hpp"

namespace discover {

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "monte_carlo" || name == "mc") return OptimizerKind::kMonteCarlo;
  if (name == "genetic" || name == "ga") return OptimizerKind::kGenetic;
  throw ConfigError("unknown optimizer '" + name + "' (expected monte_carlo or genetic)");
}

std::string to_string(OptimizerKind kind) {
  return kind == OptimizerKind::kGenetic ? "genetic" : "monte_carlo";
}

nlohmann::json SolverConfig::to_json() const {
  return {{"u_x", u_x},
          {"u_y", u_y},
          {"alpha", alpha},
          {"delta", delta},
          {"projections", projections},
          {"k", k},
          {"h", h},
          {"candidates", candidates},
          {"iterations", iterations},
          {"optimizer", to_string(optimizer)},
          {"phi", cone.phi},
          {"lambda_max", cone.lambda_max},
          {"tau", cone.tau},
          {"kappa", kappa},
          {"eta0", eta0},
          {"seed", seed},
          {"grid_size", grid_size},
          {"ucl_square_integrand", ucl_square_integrand},
          {"per_feature_lambda", per_feature_lambda},
          {"mutation_rate", mutation_rate},
          {"elite_size", elite_size},
          {"stop_when_certified", stop_when_certified}};
}

namespace {

double read_number(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("'" + key + "' must be a number, got " + v.dump(), key);
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError("'" + key + "' must be finite", key);
  return x;
}

std::uint64_t read_count(const nlohmann::json& v, const std::string& key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    if (v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    throw ConfigError("'" + key + "' must be non-negative, got " + v.dump(), key);
  }
  throw ConfigError("'" + key + "' must be a non-negative integer, got " + v.dump(), key);
}

bool read_bool(const nlohmann::json& v, const std::string& key) {
  if (!v.is_boolean()) throw ConfigError("'" + key + "' must be true or false, got " + v.dump(), key);
  return v.get<bool>();
}

}  // namespace

SolverConfig SolverConfig::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("solver settings must be a JSON object");
  SolverConfig c;
  for (const auto& [key, v] : doc.items()) {
    if (key == "u_x") c.u_x = read_number(v, key);
    else if (key == "u_y") c.u_y = read_number(v, key);
    else if (key == "alpha") c.alpha = read_number(v, key);
    else if (key == "delta") c.delta = read_number(v, key);
    else if (key == "projections") c.projections = read_count(v, key);
    else if (key == "k") c.k = read_count(v, key);
    else if (key == "h") c.h = read_count(v, key);
    else if (key == "candidates") c.candidates = read_count(v, key);
    else if (key == "iterations") c.iterations = read_count(v, key);
    else if (key == "optimizer") {
      if (!v.is_string()) throw ConfigError("'optimizer' must be a string", "optimizer");
      try {
        c.optimizer = parse_optimizer(v.get<std::string>());
      } catch (const ConfigError& e) {
        throw ConfigError(e.what(), "optimizer");
      }
    } else if (key == "phi") c.cone.phi = read_number(v, key);
    else if (key == "lambda_max") c.cone.lambda_max = read_number(v, key);
    else if (key == "tau") c.cone.tau = read_number(v, key);
    else if (key == "kappa") c.kappa = read_number(v, key);
    else if (key == "eta0") c.eta0 = read_number(v, key);
    else if (key == "seed") c.seed = read_count(v, key);
    else if (key == "grid_size") c.grid_size = read_count(v, key);
    else if (key == "ucl_square_integrand") c.ucl_square_integrand = read_bool(v, key);
    else if (key == "per_feature_lambda") c.per_feature_lambda = read_bool(v, key);
    else if (key == "mutation_rate") c.mutation_rate = read_number(v, key);
    else if (key == "elite_size") c.elite_size = read_count(v, key);
    else if (key == "stop_when_certified") c.stop_when_certified = read_bool(v, key);
    else throw ConfigError("unknown solver setting '" + key + "'", key);
  }
  return c;
}

void validate(const SolverConfig& c, std::size_t rows) {
  auto fail = [](const std::string& key, const std::string& msg) { throw ConfigError(msg, key); };
  if (!(c.u_x >= 0.0) || !std::isfinite(c.u_x)) fail("u_x", "u_x must be a finite non-negative number");
  if (!(c.u_y >= 0.0) || !std::isfinite(c.u_y)) fail("u_y", "u_y must be a finite non-negative number");
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) fail("alpha", "alpha must lie in (0, 1)");
  if (!(c.delta > 0.0 && c.delta < 0.5)) fail("delta", "delta must lie in (0, 0.5)");
  if (c.projections == 0) fail("projections", "projections must be at least 1");
  if (c.k == 0) fail("k", "k must be at least 1");
  if (rows > 0 && c.k > rows) {
    fail("k", "k = " + std::to_string(c.k) + " exceeds the cohort size " + std::to_string(rows));
  }
  if (c.h == 0) fail("h", "h must be at least 1");
  if (c.candidates == 0) fail("candidates", "candidates must be at least 1");
  if (c.iterations == 0) fail("iterations", "iterations must be at least 1");
  if (!(c.kappa > 0.0 && c.kappa < 0.5)) fail("kappa", "kappa must lie in (0, 0.5)");
  if (!(c.eta0 >= 0.0 && c.eta0 <= 1.0)) fail("eta0", "eta0 must lie in [0, 1]");
  if (c.grid_size == 0) fail("grid_size", "grid_size must be at least 1");
  if (!(c.mutation_rate >= 0.0 && c.mutation_rate <= 1.0)) fail("mutation_rate", "mutation_rate must lie in [0, 1]");
  if (c.elite_size == 0) fail("elite_size", "elite_size must be at least 1");
  if (!(c.cone.phi >= 0.0 && c.cone.phi <= std::numbers::pi)) fail("phi", "phi must lie in [0, pi]");
  if (!(c.cone.lambda_max > 0.0 && c.cone.lambda_max <= 1.0)) fail("lambda_max", "lambda_max must lie in (0, 1]");
  if (!(c.cone.tau > 0.0)) fail("tau", "tau must be positive");
}

CertifyResult certify(const Matrix& x, const Matrix& xp, std::span<const double> ystar, const Predictor& model,
                      const ProjectionSet& dirs, const UclOptions& options, double u_x, double u_y) {
  CertifyResult out;
  out.ucl_sw = ucl_sw2(x, xp, dirs, options).ucl;
  out.ucl_w = ucl_w2(checked_predict(model, x), ystar, options).ucl;
  out.feasible = out.ucl_sw <= u_x && out.ucl_w <= u_y;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// Mean squared gap between `ref` and the sorted sequence obtained from
// `sorted` by removing the entries at positions `drop` (ascending) and merging
// in `add` (ascending). Equals a full re-sort of the edited sample.
double merged_cost(std::span<const double> sorted, std::span<const std::size_t> drop,
                   std::span<const double> add, std::span<const double> ref) {
  const std::size_t n = sorted.size();
  double s = 0.0;
  std::size_t i = 0, di = 0, ai = 0;
  for (std::size_t r = 0; r < n; ++r) {
    while (di < drop.size() && i == drop[di]) {
      ++i;
      ++di;
    }
    double v;
    if (ai < add.size() && (i >= n || add[ai] < sorted[i])) {
      v = add[ai++];
    } else {
      v = sorted[i++];
    }
    const double diff = v - ref[r];
    s += diff * diff;
  }
  return s / static_cast<double>(n);
}

}  // namespace

ObjectiveEngine::ObjectiveEngine(const Matrix& factual, std::span<const double> ystar, ProjectionSet dirs,
                                 UclOptions ucl)
    : xp_(factual), ystar_(ystar.begin(), ystar.end()), dirs_(std::move(dirs)), ucl_(ucl) {
  if (factual.rows == 0) throw ArgumentError("empty factual cohort");
  if (ystar_.size() != factual.rows) {
    throw ArgumentError("target has " + std::to_string(ystar_.size()) + " values for " +
                        std::to_string(factual.rows) + " rows");
  }
  if (dirs_.dim != factual.cols) throw ArgumentError("projection dimension does not match cohort width");
  validate(ucl_);
  kernels::parallel::project(xp_, dirs_, pxp_);
  pxp_sorted_ = pxp_;
  kernels::parallel::sort_slices(pxp_sorted_);
  ystar_sorted_ = ystar_;
  std::sort(ystar_sorted_.begin(), ystar_sorted_.end());
}

void ObjectiveEngine::refresh_order() {
  const std::size_t n = px_.n;
  std::vector<std::uint32_t> order;
  kernels::parallel::argsort_slices(px_, order);
  px_sorted_ = Projected(px_.count, n);
  px_rank_.assign(px_.count * n, 0);
  for (std::size_t k = 0; k < px_.count; ++k) {
    for (std::size_t r = 0; r < n; ++r) {
      const std::uint32_t i = order[k * n + r];
      px_sorted_.values[k * n + r] = px_.values[k * n + i];
      px_rank_[k * n + i] = static_cast<std::uint32_t>(r);
    }
  }
  std::vector<std::size_t> yo(n);
  std::iota(yo.begin(), yo.end(), 0);
  std::stable_sort(yo.begin(), yo.end(), [&](std::size_t a, std::size_t b) { return y_[a] < y_[b]; });
  y_sorted_.resize(n);
  y_rank_.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    y_sorted_[r] = y_[yo[r]];
    y_rank_[yo[r]] = r;
  }
}

void ObjectiveEngine::reset(const Matrix& x, const Predictor& model) {
  if (x.rows != xp_.rows || x.cols != xp_.cols) throw ArgumentError("iterate shape differs from the factual cohort");
  x_ = x;
  kernels::parallel::project(x_, dirs_, px_);
  y_ = checked_predict(model, x_);
  refresh_order();
}

ObjectiveEngine::Snapshot ObjectiveEngine::evaluate() const {
  Snapshot s;
  std::vector<double> costs(dirs_.count);
  kernels::parallel::slice_costs(px_, pxp_sorted_, costs);
  double total = 0.0;
  for (double c : costs) total += c;
  s.q_x = total / static_cast<double>(dirs_.count);
  s.q_y = merged_cost(y_sorted_, {}, {}, ystar_sorted_);
  s.plans = sliced_plans(px_, pxp_);
  s.output_plan = w2_1d(y_, ystar_).plan;
  s.ucl_sw = sliced_ucl_sorted(px_sorted_, pxp_sorted_, ucl_);
  s.ucl_w = ucl_sorted(y_sorted_, ystar_sorted_, ucl_);
  return s;
}

std::pair<double, double> ObjectiveEngine::candidate_costs(const Candidate& candidate,
                                                           std::span<const double> outputs) const {
  const std::size_t n = px_.n;
  const std::size_t m = candidate.edits.size();
  if (outputs.size() != m) throw ArgumentError("candidate_costs: one output per edited row is required");
  std::vector<std::size_t> drop(m);
  std::vector<double> add(m);
  double total = 0.0;
  for (std::size_t k = 0; k < dirs_.count; ++k) {
    const auto theta = dirs_.direction(k);
    for (std::size_t j = 0; j < m; ++j) {
      drop[j] = px_rank_[k * n + candidate.edits[j].row];
      add[j] = kernels::detail::dot(theta, candidate.edits[j].values);
    }
    std::sort(drop.begin(), drop.end());
    std::sort(add.begin(), add.end());
    total += merged_cost(px_sorted_.slice(k), drop, add, pxp_sorted_.slice(k));
  }
  for (std::size_t j = 0; j < m; ++j) {
    drop[j] = y_rank_[candidate.edits[j].row];
    add[j] = outputs[j];
  }
  std::sort(drop.begin(), drop.end());
  std::sort(add.begin(), add.end());
  return {total / static_cast<double>(dirs_.count), merged_cost(y_sorted_, drop, add, ystar_sorted_)};
}

void ObjectiveEngine::apply(const Candidate& candidate, std::span<const double> outputs) {
  if (outputs.size() != candidate.edits.size()) throw ArgumentError("apply: one output per edited row is required");
  if (candidate.edits.empty()) return;
  std::vector<std::size_t> rows;
  for (std::size_t j = 0; j < candidate.edits.size(); ++j) {
    const auto& e = candidate.edits[j];
    std::copy(e.values.begin(), e.values.end(), x_.row(e.row).begin());
    y_[e.row] = outputs[j];
    rows.push_back(e.row);
  }
  Projected fresh;
  kernels::parallel::project_rows(x_, rows, dirs_, fresh);
  for (std::size_t k = 0; k < dirs_.count; ++k) {
    for (std::size_t j = 0; j < rows.size(); ++j) px_.values[k * px_.n + rows[j]] = fresh.values[k * rows.size() + j];
  }
  refresh_order();
}

// ---------------------------------------------------------------------------

namespace {

SolverConfig validated(const SolverConfig& config, std::size_t rows) {
  validate(config, rows);
  return config;
}

}  // namespace

Solver::Solver(const CohortMatrix& factual, std::span<const double> ystar, PredictorPtr model, SolverConfig config)
    : factual_(factual),
      ystar_(ystar.begin(), ystar.end()),
      model_(std::move(model)),
      config_(validated(config, factual.row_count())),
      engine_(factual.values(), ystar, sample_projections(factual.dim(), config.projections, config.seed),
              config.ucl()),
      tables_(build_embeddings(factual.schema(), config.seed)),
      eta_{config.eta0, 0.0, 1.0, config.kappa} {
  if (!model_) throw ArgumentError("solver needs a predictor");
  try {
    engine_.reset(factual.values(), *model_);
  } catch (const PredictorError& e) {
    throw PredictorError(std::string("initial evaluation: ") + e.what());
  }
}

double Solver::objective(double eta) const {
  const auto s = snapshot_ ? *snapshot_ : engine_.evaluate();
  return (1.0 - eta) * s.q_x + eta * s.q_y;
}

IterationRecord Solver::step() {
  if (!snapshot_) snapshot_ = engine_.evaluate();
  const auto& snap = *snapshot_;
  const Matrix& x = engine_.current();
  const std::size_t t = iteration_++;

  IterationRecord rec;
  rec.iteration = t;
  rec.q_x = snap.q_x;
  rec.q_y = snap.q_y;
  rec.ucl_sw = snap.ucl_sw;
  rec.ucl_w = snap.ucl_w;
  const double a = config_.u_x - snap.ucl_sw;
  const double b = config_.u_y - snap.ucl_w;
  rec.feasible = a >= 0.0 && b >= 0.0;
  eta_ = narrow_interval(balance_eta(a, b, eta_), eta_);
  const double eta = eta_.eta;
  rec.eta = eta;
  rec.lower = eta_.lower;
  rec.upper = eta_.upper;
  rec.q = (1.0 - eta) * snap.q_x + eta * snap.q_y;

  const auto qx = row_scores_input(engine_.projected(), engine_.factual_projected(), snap.plans);
  const auto qy = row_scores_output(engine_.outputs(), engine_.target(), snap.output_plan);
  const auto scores = combine(qx, qy, eta);
  rec.selected_rows = top_k(scores.q, config_.k);
  const auto field = guidance(engine_.projected(), engine_.factual_projected(), engine_.directions(), snap.plans,
                              rec.selected_rows);

  const ProposalOptions options = config_.proposal();
  const ProposalContext ctx{x, rec.selected_rows, field, factual_.schema(), tables_, options, config_.seed, t};
  const CandidateBatch batch = config_.optimizer == OptimizerKind::kGenetic
                                   ? genetic_propose(ctx, config_.candidates, elite_)
                                   : monte_carlo_propose(ctx, config_.candidates);

  // One predictor call for every edited row of the batch; rows that came back
  // unchanged reuse the cached output.
  const std::size_t count = batch.candidates.size();
  std::vector<std::vector<double>> outputs(count);
  std::vector<std::pair<std::size_t, std::size_t>> pending;  // (candidate, edit)
  for (std::size_t c = 0; c < count; ++c) {
    const auto& edits = batch.candidates[c].edits;
    outputs[c].resize(edits.size());
    for (std::size_t j = 0; j < edits.size(); ++j) {
      const auto cur = x.row(edits[j].row);
      if (std::equal(cur.begin(), cur.end(), edits[j].values.begin())) {
        outputs[c][j] = engine_.outputs()[edits[j].row];
      } else {
        pending.emplace_back(c, j);
      }
    }
  }
  if (!pending.empty()) {
    Matrix query(pending.size(), x.cols);
    for (std::size_t q = 0; q < pending.size(); ++q) {
      const auto& v = batch.candidates[pending[q].first].edits[pending[q].second].values;
      std::copy(v.begin(), v.end(), query.row(q).begin());
    }
    std::vector<double> values;
    try {
      values = checked_predict(*model_, query);
    } catch (const PredictorError& e) {
      std::ostringstream msg;
      msg << "iteration " << t << ": " << e.what() << " (while scoring edits of rows";
      for (std::size_t i : rec.selected_rows) msg << ' ' << i;
      msg << ')';
      throw PredictorError(msg.str());
    }
    for (std::size_t q = 0; q < pending.size(); ++q) outputs[pending[q].first][pending[q].second] = values[q];
  }

  std::vector<double> objective(count);
#pragma omp parallel for schedule(dynamic)
  for (long long cc = 0; cc < static_cast<long long>(count); ++cc) {
    const auto c = static_cast<std::size_t>(cc);
    const auto [cx, cy] = engine_.candidate_costs(batch.candidates[c], outputs[c]);
    objective[c] = (1.0 - eta) * cx + eta * cy;
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < count; ++c) {
    if (objective[c] < objective[best]) best = c;
  }
  rec.chosen_candidate = best;
  rec.q_selected = objective[best];
  for (const auto& e : batch.candidates[best].edits) {
    const auto cur = x.row(e.row);
    if (!std::equal(cur.begin(), cur.end(), e.values.begin())) ++rec.rows_edited;
  }

  if (config_.optimizer == OptimizerKind::kGenetic) {
    elite_ = select_elite(batch, objective, x, config_.elite_size);
  }
  engine_.apply(batch.candidates[best], outputs[best]);
  snapshot_ = engine_.evaluate();
  return rec;
}

SolveReport Solver::run(const StepObserver& observer) {
  SolveReport report;
  report.config = config_;
  if (!snapshot_) snapshot_ = engine_.evaluate();

  double best_violation = std::numeric_limits<double>::infinity();
  Matrix best_x;
  std::size_t best_t = 0;
  ObjectiveEngine::Snapshot best_snap;
  auto consider = [&](std::size_t t) {
    const auto& s = *snapshot_;
    const double v = std::max(0.0, s.ucl_sw - config_.u_x) + std::max(0.0, s.ucl_w - config_.u_y);
    if (v <= best_violation) {
      best_violation = v;
      best_x = engine_.current();
      best_t = t;
      best_snap = s;
    }
  };

  consider(0);
  for (std::size_t t = 0; t < config_.iterations; ++t) {
    if (config_.stop_when_certified && best_violation == 0.0 && best_t == t) break;
    Matrix before;
    if (observer) before = engine_.current();
    report.trajectory.push_back(step());
    ++report.iterations_run;
    if (observer) observer({before, engine_.current(), report.trajectory.back()});
    consider(t + 1);
  }

  report.last_iterate = engine_.current();
  report.certified = best_violation == 0.0;
  const auto& chosen = report.certified ? best_snap : *snapshot_;
  report.returned_iteration = report.certified ? best_t : report.iterations_run;
  report.final_check = {report.certified, chosen.ucl_sw, chosen.ucl_w};
  report.final_q_x = chosen.q_x;
  report.final_q_y = chosen.q_y;
  if (report.certified) report.cohort.emplace(factual_.schema_ptr(), std::move(best_x));
  return report;
}

SolveReport solve(const CohortMatrix& factual, std::span<const double> ystar, PredictorPtr model,
                  const SolverConfig& config, const StepObserver& observer) {
  Solver solver(factual, ystar, std::move(model), config);
  return solver.run(observer);
}

std::string trajectory_csv(const std::vector<IterationRecord>& trajectory) {
  std::string out = "iteration,Q,Q_x,Q_y,ucl_sw,ucl_w,eta,l,r,feasible,k_edited,chosen_candidate,Q_selected\n";
  for (const auto& r : trajectory) {
    out += std::to_string(r.iteration) + ',' + format_double(r.q) + ',' + format_double(r.q_x) + ',' +
           format_double(r.q_y) + ',' + format_double(r.ucl_sw) + ',' + format_double(r.ucl_w) + ',' +
           format_double(r.eta) + ',' + format_double(r.lower) + ',' + format_double(r.upper) + ',' +
           (r.feasible ? "1" : "0") + ',' + std::to_string(r.rows_edited) + ',' +
           std::to_string(r.chosen_candidate) + ',' + format_double(r.q_selected) + '\n';
  }
  return out;
}

}  // namespace discover
