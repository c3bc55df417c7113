#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace discover {

// N unit directions in R^d, stored row-major (direction k at [k*d, (k+1)*d)).
struct ProjectionSet {
  std::size_t dim = 0;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  std::vector<double> directions;

  std::span<const double> direction(std::size_t k) const { return {directions.data() + k * dim, dim}; }
};

// Projected samples in projection-major layout: slice k holds theta_k . x_i
// for i = 0..n-1.
struct Projected {
  std::size_t count = 0;
  std::size_t n = 0;
  std::vector<double> values;

  Projected() = default;
  Projected(std::size_t N, std::size_t rows) : count(N), n(rows), values(N * rows) {}

  std::span<double> slice(std::size_t k) { return {values.data() + k * n, n}; }
  std::span<const double> slice(std::size_t k) const { return {values.data() + k * n, n}; }
};

// Per-projection permutations, same layout as Projected: entry [k*n + i] is
// the factual row matched to current row i under projection k.
using PlanTable = std::vector<std::uint32_t>;

}  // namespace discover
