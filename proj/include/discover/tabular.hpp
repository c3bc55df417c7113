#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace discover {

enum class FeatureKind { kNumerical, kCategorical };

// One column of a cohort. Categorical levels are addressed by their position
// in `levels`; admissible_levels holds positions too.
struct FeatureSchema {
  std::string name;
  FeatureKind kind = FeatureKind::kNumerical;
  double range_min = 0.0;
  double range_max = 1.0;
  std::vector<std::string> levels;
  bool immutable = false;
  std::vector<std::size_t> admissible_levels;
  std::size_t embed_dim = 0;

  bool numerical() const { return kind == FeatureKind::kNumerical; }
  bool categorical() const { return kind == FeatureKind::kCategorical; }
  std::size_t cardinality() const { return levels.size(); }
  bool admissible(std::size_t level) const;
};

// r = min(8, max(2, ceil(log2 |V|) + 1))
std::size_t default_embed_dim(std::size_t cardinality);

FeatureSchema numerical_feature(std::string name, double lo, double hi, bool immutable = false);
FeatureSchema categorical_feature(std::string name, std::vector<std::string> levels,
                                  bool immutable = false,
                                  std::optional<std::vector<std::size_t>> admissible = std::nullopt);

// Ordered, validated list of features with unique names.
class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<FeatureSchema> features);

  std::size_t size() const { return features_.size(); }
  const FeatureSchema& operator[](std::size_t p) const { return features_[p]; }
  const std::vector<FeatureSchema>& features() const { return features_; }
  std::optional<std::size_t> find(const std::string& name) const;

  std::size_t categorical_count() const;
  // Features an edit may touch.
  std::vector<std::size_t> actionable() const;

  static Schema from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
  static Schema load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<FeatureSchema> features_;
};

using SchemaPtr = std::shared_ptr<const Schema>;

// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

// n x d encoded sample set. Categorical cells hold level indices. Always valid:
// the constructor rejects out-of-range numbers and bad level indices.
class CohortMatrix {
 public:
  CohortMatrix(SchemaPtr schema, Matrix values);

  const Schema& schema() const { return *schema_; }
  const SchemaPtr& schema_ptr() const { return schema_; }
  const Matrix& values() const { return values_; }
  std::size_t row_count() const { return values_.rows; }
  std::size_t dim() const { return values_.cols; }
  std::span<const double> row(std::size_t i) const { return values_.row(i); }

 private:
  SchemaPtr schema_;
  Matrix values_;
};

// Throws ValidationError naming the first offending cell (1-based row).
void validate_row(const Schema& schema, std::span<const double> row, std::size_t row_number);

CohortMatrix load_csv(const std::filesystem::path& path, SchemaPtr schema);
CohortMatrix parse_csv(std::string_view text, SchemaPtr schema);

void decode_csv(const CohortMatrix& cohort, const std::filesystem::path& path);
std::string to_csv(const CohortMatrix& cohort);

// Clamp numerical cells into range; round categorical cells to the nearest
// valid level index.
std::vector<double> project_to_domain(std::span<const double> row, const Schema& schema);

// Shortest form guaranteed to read back to the same double (17 significant digits).
std::string format_double(double v);

// Single-column CSV of reals (header optional on read).
std::vector<double> load_column(const std::filesystem::path& path);
void save_column(const std::vector<double>& values, const std::string& header,
                 const std::filesystem::path& path);

}  // namespace discover
