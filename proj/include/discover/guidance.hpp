#pragma once

#include <optional>
#include <span>
#include <vector>

#include "discover/projection.hpp"
#include "discover/tabular.hpp"

namespace discover {

// Gradient of the input-side transport cost with respect to selected rows,
// transport plans held fixed. Only the requested rows are stored.
struct GuidanceField {
  std::vector<std::size_t> rows;
  Matrix vectors;  // one d-vector per entry of `rows`

  // nullopt when `row` was not requested.
  std::optional<std::span<const double>> at(std::size_t row) const;
};

// g_i = 2/(N n) sum_k theta_k (theta_k.x_i - theta_k.x'_{plan_k(i)})
GuidanceField guidance(const Matrix& x, const Matrix& xp, const ProjectionSet& dirs, const PlanTable& plans,
                       std::span<const std::size_t> rows);
GuidanceField guidance(const Projected& current, const Projected& factual, const ProjectionSet& dirs,
                       const PlanTable& plans, std::span<const std::size_t> rows);

}  // namespace discover
