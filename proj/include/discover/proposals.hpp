#pragma once

#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "discover/guidance.hpp"
#include "discover/rng.hpp"
#include "discover/tabular.hpp"

namespace discover {

struct ConeParams {
  double phi = std::numbers::pi / 4;  // half-angle, radians
  double lambda_max = 0.1;            // step bound as a fraction of the feature range
  double tau = 1.0;                   // categorical decoding temperature
};

void validate(const ConeParams& cone);

// Fixed random embedding of one categorical feature's levels.
struct EmbeddingTable {
  std::size_t feature = 0;
  Matrix table;                // |V_p| x r, entries N(0, 1/r)
  std::vector<double> anchor;  // unit vector u_p in R^r carrying the guidance sign
  double spread = 0.0;         // mean pairwise distance between level embeddings
};

class EmbeddingTables {
 public:
  EmbeddingTables() = default;
  EmbeddingTables(std::vector<EmbeddingTable> tables, std::size_t feature_count, std::uint64_t seed);

  const EmbeddingTable* find(std::size_t feature) const;
  bool empty() const { return tables_.empty(); }
  std::size_t size() const { return tables_.size(); }
  std::uint64_t seed() const { return seed_; }
  const std::vector<EmbeddingTable>& tables() const { return tables_; }

 private:
  std::vector<EmbeddingTable> tables_;
  std::vector<std::ptrdiff_t> index_;
  std::uint64_t seed_ = 0;
};

EmbeddingTables build_embeddings(const Schema& schema, std::uint64_t seed);

// Unit vector within angle phi of `anchor` (unit or zero). A zero anchor gives
// a uniform direction; in one dimension the cone reduces to a sign choice.
std::vector<double> cone_direction(std::span<const double> anchor, double phi, Rng& rng);

// x_p <- clamp(x_p + lambda_p * (R_max - R_min) * direction_j) for p = editable[j].
// `lambdas` holds either one shared step or one per editable feature.
void apply_numeric_step(std::span<double> row, std::span<const std::size_t> editable,
                        std::span<const double> direction, std::span<const double> lambdas, const Schema& schema);

// One cone move of the numerical coordinates `editable` around -g.
std::vector<double> propose_numeric_row(std::span<const double> row, std::span<const std::size_t> editable,
                                        std::span<const double> g_row, const ConeParams& cone, const Schema& schema,
                                        Rng& rng, bool per_feature_lambda = false);

// Samples v from `choices` with Pr(v) proportional to exp(-|E[v] - z|^2 / tau).
std::size_t decode_category(const EmbeddingTable& table, std::span<const double> z,
                            std::span<const std::size_t> choices, double tau, Rng& rng);

std::vector<double> propose_categorical_row(std::span<const double> row, std::span<const std::size_t> editable,
                                            std::span<const double> g_row, const ConeParams& cone,
                                            const EmbeddingTables& tables, const Schema& schema, Rng& rng);

// A candidate replaces whole rows. The no-op candidate has no edits.
struct RowEdit {
  std::size_t row = 0;
  std::vector<double> values;
};

struct Candidate {
  std::vector<RowEdit> edits;
};

struct CandidateBatch {
  std::vector<Candidate> candidates;  // [0] is the no-op
};

// Changed features of a row, relative to the iterate it was proposed from.
struct SparseRowEdit {
  std::size_t row = 0;
  std::vector<std::pair<std::size_t, double>> assignments;
};
using EliteEdit = std::vector<SparseRowEdit>;
using Elite = std::vector<EliteEdit>;

struct ProposalOptions {
  ConeParams cone;
  std::size_t h = 3;  // features edited per selected row
  bool per_feature_lambda = false;
  double mutation_rate = 0.3;
  std::size_t elite_size = 4;
};

// Everything a generator reads. Random draws are keyed by
// (seed, iteration, candidate, row, purpose), so candidates can be generated
// in any order with identical results.
struct ProposalContext {
  const Matrix& x;
  std::span<const std::size_t> rows;
  const GuidanceField& guidance;
  const Schema& schema;
  const EmbeddingTables& tables;
  const ProposalOptions& options;
  std::uint64_t seed = 0;
  std::uint64_t iteration = 0;
};

// Re-proposes one row: picks min(h, #actionable) features (always keeping
// `keep`, topped up at random) and routes them to the numeric and categorical
// cone moves.
std::vector<double> propose_row(const ProposalContext& ctx, std::size_t row, std::span<const double> base,
                                std::uint64_t candidate, std::uint64_t phase,
                                std::span<const std::size_t> keep = {});

CandidateBatch monte_carlo_propose(const ProposalContext& ctx, std::size_t m);

CandidateBatch genetic_propose(const ProposalContext& ctx, std::size_t m, const Elite& elite);

// Best `elite_size` candidates by score (ties to lower index), as sparse
// assignments relative to `x`.
Elite select_elite(const CandidateBatch& batch, std::span<const double> scores, const Matrix& x,
                   std::size_t elite_size);

// Row `row` of `x` with an elite's assignments for that row applied.
std::vector<double> apply_elite_row(const EliteEdit& edit, const Matrix& x, std::size_t row);

}  // namespace discover
