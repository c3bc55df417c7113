#include "discover/guidance.hpp"

#include <algorithm>

#include "discover/error.hpp"
#include "discover/kernels.hpp"

namespace discover {

std::optional<std::span<const double>> GuidanceField::at(std::size_t row) const {
  const auto it = std::find(rows.begin(), rows.end(), row);
  if (it == rows.end()) return std::nullopt;
  return vectors.row(static_cast<std::size_t>(it - rows.begin()));
}

GuidanceField guidance(const Projected& current, const Projected& factual, const ProjectionSet& dirs,
                       const PlanTable& plans, std::span<const std::size_t> rows) {
  const std::size_t n = current.n;
  if (factual.n != n || current.count != dirs.count || factual.count != dirs.count ||
      plans.size() != n * dirs.count) {
    throw ArgumentError("guidance: plans do not match the projected cohorts");
  }
  for (std::size_t i : rows) {
    if (i >= n) throw ArgumentError("guidance: row " + std::to_string(i) + " out of range");
  }
  GuidanceField field;
  field.rows.assign(rows.begin(), rows.end());
  const double scale = 2.0 / (static_cast<double>(dirs.count) * static_cast<double>(n));
  kernels::parallel::guidance_rows(dirs, current, factual, plans, rows, scale, field.vectors);
  return field;
}

GuidanceField guidance(const Matrix& x, const Matrix& xp, const ProjectionSet& dirs, const PlanTable& plans,
                       std::span<const std::size_t> rows) {
  if (x.rows != xp.rows || x.cols != xp.cols || x.cols != dirs.dim) throw ArgumentError("guidance: shape mismatch");
  Projected px, pxp;
  kernels::parallel::project(x, dirs, px);
  kernels::parallel::project(xp, dirs, pxp);
  return guidance(px, pxp, dirs, plans, rows);
}

}  // namespace discover
