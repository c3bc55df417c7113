#include "discover/proposals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "discover/error.hpp"

namespace discover {

namespace {

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::vector<double> uniform_sphere(std::size_t m, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(m);
  double n = 0.0;
  while (n < 1e-12) {
    for (double& x : v) x = normal(rng);
    n = norm2(v);
  }
  for (double& x : v) x /= n;
  return v;
}

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

}  // namespace

void validate(const ConeParams& cone) {
  if (!(cone.phi >= 0.0 && cone.phi <= std::numbers::pi)) throw ArgumentError("cone phi must lie in [0, pi]");
  if (!(cone.lambda_max > 0.0 && cone.lambda_max <= 1.0)) throw ArgumentError("lambda_max must lie in (0, 1]");
  if (!(cone.tau > 0.0)) throw ArgumentError("tau must be positive");
}

EmbeddingTables::EmbeddingTables(std::vector<EmbeddingTable> tables, std::size_t feature_count, std::uint64_t seed)
    : tables_(std::move(tables)), index_(feature_count, -1), seed_(seed) {
  for (std::size_t t = 0; t < tables_.size(); ++t) index_.at(tables_[t].feature) = static_cast<std::ptrdiff_t>(t);
}

const EmbeddingTable* EmbeddingTables::find(std::size_t feature) const {
  if (feature >= index_.size() || index_[feature] < 0) return nullptr;
  return &tables_[static_cast<std::size_t>(index_[feature])];
}

EmbeddingTables build_embeddings(const Schema& schema, std::uint64_t seed) {
  std::vector<EmbeddingTable> tables;
  for (std::size_t p = 0; p < schema.size(); ++p) {
    const auto& f = schema[p];
    if (!f.categorical()) continue;
    EmbeddingTable t;
    t.feature = p;
    const std::size_t r = f.embed_dim;
    t.table = Matrix(f.cardinality(), r);
    Rng rng = make_stream(seed, {p, 0});
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(r)));
    for (double& v : t.table.data) v = normal(rng);
    Rng anchor_rng = make_stream(seed, {p, 1});
    t.anchor = uniform_sphere(r, anchor_rng);
    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < t.table.rows; ++a) {
      for (std::size_t b = a + 1; b < t.table.rows; ++b) {
        double d2 = 0.0;
        for (std::size_t c = 0; c < r; ++c) {
          const double diff = t.table(a, c) - t.table(b, c);
          d2 += diff * diff;
        }
        total += std::sqrt(d2);
        ++pairs;
      }
    }
    t.spread = pairs ? total / static_cast<double>(pairs) : 0.0;
    tables.push_back(std::move(t));
  }
  return EmbeddingTables(std::move(tables), schema.size(), seed);
}

std::vector<double> cone_direction(std::span<const double> anchor, double phi, Rng& rng) {
  const std::size_t m = anchor.size();
  if (m == 0) return {};
  const double psi = uniform(rng, 0.0, phi);
  if (norm2(anchor) < 1e-300) return uniform_sphere(m, rng);
  if (m == 1) {
    const double sign = psi <= std::numbers::pi / 2 ? 1.0 : -1.0;
    return {sign * anchor[0]};
  }
  // Uniform unit vector orthogonal to the anchor.
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(m);
  double vn = 0.0;
  while (vn < 1e-9) {
    double along = 0.0;
    for (std::size_t p = 0; p < m; ++p) {
      v[p] = normal(rng);
      along += v[p] * anchor[p];
    }
    for (std::size_t p = 0; p < m; ++p) v[p] -= along * anchor[p];
    vn = norm2(v);
  }
  const double c = std::cos(psi);
  const double s = std::sin(psi);
  std::vector<double> d(m);
  for (std::size_t p = 0; p < m; ++p) d[p] = c * anchor[p] + s * (v[p] / vn);
  return d;
}

void apply_numeric_step(std::span<double> row, std::span<const std::size_t> editable,
                        std::span<const double> direction, std::span<const double> lambdas, const Schema& schema) {
  for (std::size_t j = 0; j < editable.size(); ++j) {
    const std::size_t p = editable[j];
    const auto& f = schema[p];
    const double lambda = lambdas.size() == 1 ? lambdas[0] : lambdas[j];
    row[p] = std::clamp(row[p] + lambda * (f.range_max - f.range_min) * direction[j], f.range_min, f.range_max);
  }
}

std::vector<double> propose_numeric_row(std::span<const double> row, std::span<const std::size_t> editable,
                                        std::span<const double> g_row, const ConeParams& cone, const Schema& schema,
                                        Rng& rng, bool per_feature_lambda) {
  std::vector<double> out(row.begin(), row.end());
  if (editable.empty()) return out;
  std::vector<double> anchor(editable.size(), 0.0);
  if (!g_row.empty()) {
    for (std::size_t j = 0; j < editable.size(); ++j) anchor[j] = -g_row[editable[j]];
    const double n = norm2(anchor);
    if (n > 0.0 && std::isfinite(n)) {
      for (double& a : anchor) a /= n;
    } else {
      std::fill(anchor.begin(), anchor.end(), 0.0);
    }
  }
  const auto direction = cone_direction(anchor, cone.phi, rng);
  std::vector<double> lambdas(per_feature_lambda ? editable.size() : 1);
  for (double& l : lambdas) l = uniform(rng, 0.0, cone.lambda_max);
  apply_numeric_step(out, editable, direction, lambdas, schema);
  return out;
}

std::size_t decode_category(const EmbeddingTable& table, std::span<const double> z,
                            std::span<const std::size_t> choices, double tau, Rng& rng) {
  if (choices.empty()) throw ArgumentError("decode_category: no levels to choose from");
  std::vector<double> dist(choices.size());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < choices.size(); ++c) {
    const auto e = table.table.row(choices[c]);
    double d2 = 0.0;
    for (std::size_t j = 0; j < e.size(); ++j) {
      const double diff = e[j] - z[j];
      d2 += diff * diff;
    }
    dist[c] = d2;
    best = std::min(best, d2);
  }
  // Shift by the minimum so tiny temperatures do not underflow every weight.
  std::vector<double> weight(choices.size());
  double total = 0.0;
  for (std::size_t c = 0; c < choices.size(); ++c) {
    weight[c] = std::exp(-(dist[c] - best) / tau);
    total += weight[c];
  }
  double u = uniform(rng, 0.0, total);
  for (std::size_t c = 0; c < choices.size(); ++c) {
    if (u < weight[c]) return choices[c];
    u -= weight[c];
  }
  for (std::size_t c = choices.size(); c-- > 0;) {
    if (weight[c] > 0.0) return choices[c];
  }
  return choices.back();
}

std::vector<double> propose_categorical_row(std::span<const double> row, std::span<const std::size_t> editable,
                                            std::span<const double> g_row, const ConeParams& cone,
                                            const EmbeddingTables& tables, const Schema& schema, Rng& rng) {
  std::vector<double> out(row.begin(), row.end());
  for (std::size_t p : editable) {
    const auto& f = schema[p];
    const EmbeddingTable* table = tables.find(p);
    if (!table) throw ArgumentError("no embedding table for categorical feature '" + f.name + "'");
    const auto current = static_cast<std::size_t>(row[p]);
    std::vector<std::size_t> choices = f.admissible_levels;
    if (!f.admissible(current)) {
      choices.insert(std::upper_bound(choices.begin(), choices.end(), current), current);
    }
    if (choices.size() == 1) continue;

    const std::size_t r = table->table.cols;
    const double g = g_row.empty() ? 0.0 : g_row[p];
    std::vector<double> anchor(r, 0.0);
    if (g != 0.0 && std::isfinite(g)) {
      const double sign = g < 0.0 ? 1.0 : -1.0;  // sign of -g
      for (std::size_t j = 0; j < r; ++j) anchor[j] = sign * table->anchor[j];
    }
    const auto direction = cone_direction(anchor, cone.phi, rng);
    const double step = uniform(rng, 0.0, cone.lambda_max) * table->spread;
    std::vector<double> z(r);
    const auto e = table->table.row(current);
    for (std::size_t j = 0; j < r; ++j) z[j] = e[j] + step * direction[j];
    out[p] = static_cast<double>(decode_category(*table, z, choices, cone.tau, rng));
  }
  return out;
}

std::vector<double> propose_row(const ProposalContext& ctx, std::size_t row, std::span<const double> base,
                                std::uint64_t candidate, std::uint64_t phase, std::span<const std::size_t> keep) {
  const Schema& schema = ctx.schema;
  std::vector<std::size_t> chosen(keep.begin(), keep.end());
  std::vector<std::size_t> pool;
  for (std::size_t p = 0; p < schema.size(); ++p) {
    if (!schema[p].immutable && std::find(chosen.begin(), chosen.end(), p) == chosen.end()) pool.push_back(p);
  }
  Rng subset_rng = make_stream(ctx.seed, {ctx.iteration, candidate, row, phase, tag(Purpose::kFeatureSubset)});
  while (chosen.size() < ctx.options.h && !pool.empty()) {
    const auto pick = std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(subset_rng);
    chosen.push_back(pool[pick]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  std::sort(chosen.begin(), chosen.end());

  std::vector<std::size_t> numeric, categorical;
  for (std::size_t p : chosen) (schema[p].numerical() ? numeric : categorical).push_back(p);

  const auto g = ctx.guidance.at(row);
  const std::span<const double> g_row = g ? *g : std::span<const double>{};
  std::vector<double> out(base.begin(), base.end());
  if (!numeric.empty()) {
    Rng rng = make_stream(ctx.seed, {ctx.iteration, candidate, row, phase, tag(Purpose::kNumeric)});
    out = propose_numeric_row(out, numeric, g_row, ctx.options.cone, schema, rng, ctx.options.per_feature_lambda);
  }
  if (!categorical.empty()) {
    Rng rng = make_stream(ctx.seed, {ctx.iteration, candidate, row, phase, tag(Purpose::kCategorical)});
    out = propose_categorical_row(out, categorical, g_row, ctx.options.cone, ctx.tables, schema, rng);
  }
  return out;
}

namespace {

constexpr std::uint64_t kPhaseFresh = 0;
constexpr std::uint64_t kPhaseMutation = 1;

Candidate fresh_candidate(const ProposalContext& ctx, std::uint64_t m) {
  Candidate c;
  c.edits.reserve(ctx.rows.size());
  for (std::size_t i : ctx.rows) c.edits.push_back({i, propose_row(ctx, i, ctx.x.row(i), m, kPhaseFresh)});
  return c;
}

std::vector<std::size_t> changed_features(std::span<const double> a, std::span<const double> b) {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < a.size(); ++p) {
    if (a[p] != b[p]) out.push_back(p);
  }
  return out;
}

void mutate(const ProposalContext& ctx, Candidate& c, std::uint64_t m) {
  if (ctx.options.mutation_rate <= 0.0) return;
  for (auto& edit : c.edits) {
    Rng rng = make_stream(ctx.seed, {ctx.iteration, m, edit.row, tag(Purpose::kMutation)});
    if (!std::bernoulli_distribution(std::min(1.0, ctx.options.mutation_rate))(rng)) continue;
    // Re-perturb the features this row already changes so the row stays within h.
    const auto keep = changed_features(edit.values, ctx.x.row(edit.row));
    edit.values = propose_row(ctx, edit.row, edit.values, m, kPhaseMutation, keep);
  }
}

}  // namespace

CandidateBatch monte_carlo_propose(const ProposalContext& ctx, std::size_t m) {
  if (ctx.rows.empty()) throw ArgumentError("monte_carlo_propose: editable row set is empty");
  if (m == 0) throw ArgumentError("monte_carlo_propose: M must be positive");
  CandidateBatch batch;
  batch.candidates.resize(m + 1);
#pragma omp parallel for schedule(dynamic)
  for (long long c = 1; c <= static_cast<long long>(m); ++c) {
    batch.candidates[static_cast<std::size_t>(c)] = fresh_candidate(ctx, static_cast<std::uint64_t>(c));
  }
  return batch;
}

std::vector<double> apply_elite_row(const EliteEdit& edit, const Matrix& x, std::size_t row) {
  std::vector<double> out(x.row(row).begin(), x.row(row).end());
  for (const auto& r : edit) {
    if (r.row != row) continue;
    for (const auto& [p, v] : r.assignments) out[p] = v;
  }
  return out;
}

CandidateBatch genetic_propose(const ProposalContext& ctx, std::size_t m, const Elite& elite) {
  if (ctx.rows.empty()) throw ArgumentError("genetic_propose: editable row set is empty");
  if (m == 0) throw ArgumentError("genetic_propose: M must be positive");
  if (elite.empty()) {
    CandidateBatch batch = monte_carlo_propose(ctx, m);
    for (std::size_t c = 1; c <= m; ++c) mutate(ctx, batch.candidates[c], c);
    return batch;
  }
  CandidateBatch batch;
  batch.candidates.resize(m + 1);
#pragma omp parallel for schedule(dynamic)
  for (long long cc = 1; cc <= static_cast<long long>(m); ++cc) {
    const auto c = static_cast<std::uint64_t>(cc);
    Rng parent_rng = make_stream(ctx.seed, {ctx.iteration, c, tag(Purpose::kParents)});
    std::uniform_int_distribution<std::size_t> pick(0, elite.size() - 1);
    const EliteEdit& a = elite[pick(parent_rng)];
    const EliteEdit& b = elite[pick(parent_rng)];
    Candidate child;
    child.edits.reserve(ctx.rows.size());
    for (std::size_t i : ctx.rows) {
      Rng rng = make_stream(ctx.seed, {ctx.iteration, c, i, tag(Purpose::kCrossover)});
      const bool from_a = std::bernoulli_distribution(0.5)(rng);
      child.edits.push_back({i, apply_elite_row(from_a ? a : b, ctx.x, i)});
    }
    mutate(ctx, child, c);
    batch.candidates[c] = std::move(child);
  }
  return batch;
}

Elite select_elite(const CandidateBatch& batch, std::span<const double> scores, const Matrix& x,
                   std::size_t elite_size) {
  std::vector<std::size_t> order(batch.candidates.size());
  for (std::size_t c = 0; c < order.size(); ++c) order[c] = c;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  Elite elite;
  for (std::size_t r = 0; r < order.size() && elite.size() < elite_size; ++r) {
    EliteEdit edit;
    for (const auto& e : batch.candidates[order[r]].edits) {
      SparseRowEdit sparse{e.row, {}};
      for (std::size_t p : changed_features(e.values, x.row(e.row))) sparse.assignments.emplace_back(p, e.values[p]);
      if (!sparse.assignments.empty()) edit.push_back(std::move(sparse));
    }
    elite.push_back(std::move(edit));
  }
  return elite;
}

}  // namespace discover
