#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "discover/projection.hpp"
#include "discover/tabular.hpp"

namespace discover {

// N i.i.d. directions uniform on S^{d-1}: standard normal vectors, normalized.
ProjectionSet sample_projections(std::size_t dim, std::size_t count, std::uint64_t seed);

struct W2Result {
  double cost = 0.0;
  // plan[i] is the index in b matched to a[i] (monotone rearrangement, ties
  // broken by original index).
  std::vector<std::size_t> plan;
};

// Squared 1D Wasserstein cost between equal-size empirical samples.
W2Result w2_1d(std::span<const double> a, std::span<const double> b);

struct SlicedResult {
  double cost = 0.0;
  std::vector<double> per_projection;
  PlanTable plans;
};

SlicedResult sw2(const Matrix& x, const Matrix& xp, const ProjectionSet& dirs);
SlicedResult sw2(const CohortMatrix& x, const CohortMatrix& xp, const ProjectionSet& dirs);

// Matching plans for already-projected samples (slice-wise sorting permutations).
PlanTable sliced_plans(const Projected& current, const Projected& factual);

struct QuantileBand {
  double lo = 0.0;
  double hi = 0.0;
};

// DKW half-width sqrt(ln(4/alpha) / (2n)).
double band_half_width(std::size_t n, double alpha);
QuantileBand quantile_band(double u, std::size_t n, double alpha);

struct UclOptions {
  double delta = 0.05;
  double alpha = 0.1;
  std::size_t grid_size = 100;
  // Integrate D(u)^2; false integrates D(u) as printed in the original bound.
  bool square_integrand = true;
};

struct UclResult {
  double point_estimate = 0.0;
  double ucl = 0.0;
  double delta = 0.0;
  double alpha = 0.0;
  std::size_t grid_size = 0;
};

void validate(const UclOptions& options);

UclResult ucl_w2(std::span<const double> y, std::span<const double> ystar, const UclOptions& options = {});
UclResult ucl_sw2(const Matrix& x, const Matrix& xp, const ProjectionSet& dirs, const UclOptions& options = {});

// Input-side UCL from projections that are already sorted slice-wise.
double sliced_ucl_sorted(const Projected& sorted_current, const Projected& sorted_factual,
                         const UclOptions& options);
double ucl_sorted(std::span<const double> sorted_y, std::span<const double> sorted_ystar,
                  const UclOptions& options);

}  // namespace discover
