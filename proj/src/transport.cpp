#include "discover/transport.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "discover/error.hpp"
#include "discover/kernels.hpp"
#include "discover/rng.hpp"

namespace discover {

ProjectionSet sample_projections(std::size_t dim, std::size_t count, std::uint64_t seed) {
  if (dim == 0) throw ArgumentError("sample_projections: dimension must be positive");
  if (count == 0) throw ArgumentError("sample_projections: projection count must be positive");
  ProjectionSet set;
  set.dim = dim;
  set.count = count;
  set.seed = seed;
  set.directions.resize(dim * count);
  Rng rng(splitmix64(seed));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t k = 0; k < count; ++k) {
    double* theta = set.directions.data() + k * dim;
    double norm = 0.0;
    while (norm < 1e-12) {
      norm = 0.0;
      for (std::size_t p = 0; p < dim; ++p) {
        theta[p] = normal(rng);
        norm += theta[p] * theta[p];
      }
      norm = std::sqrt(norm);
    }
    for (std::size_t p = 0; p < dim; ++p) theta[p] /= norm;
  }
  return set;
}

W2Result w2_1d(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ArgumentError("w2_1d: sample sizes differ (" + std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()) + ")");
  }
  if (a.empty()) throw ArgumentError("w2_1d: empty samples");
  const std::size_t n = a.size();
  std::vector<std::size_t> oa(n), ob(n);
  std::iota(oa.begin(), oa.end(), 0);
  std::iota(ob.begin(), ob.end(), 0);
  std::stable_sort(oa.begin(), oa.end(), [&](std::size_t i, std::size_t j) { return a[i] < a[j]; });
  std::stable_sort(ob.begin(), ob.end(), [&](std::size_t i, std::size_t j) { return b[i] < b[j]; });
  W2Result out;
  out.plan.resize(n);
  double s = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double diff = a[oa[r]] - b[ob[r]];
    s += diff * diff;
    out.plan[oa[r]] = ob[r];
  }
  out.cost = s / static_cast<double>(n);
  return out;
}

PlanTable sliced_plans(const Projected& current, const Projected& factual) {
  std::vector<std::uint32_t> oc, of;
  kernels::parallel::argsort_slices(current, oc);
  kernels::parallel::argsort_slices(factual, of);
  const std::size_t n = current.n;
  PlanTable plans(current.count * n);
  for (std::size_t k = 0; k < current.count; ++k) {
    for (std::size_t r = 0; r < n; ++r) plans[k * n + oc[k * n + r]] = of[k * n + r];
  }
  return plans;
}

namespace {

void check_shapes(const Matrix& x, const Matrix& xp, const ProjectionSet& dirs) {
  if (x.rows != xp.rows || x.cols != xp.cols) {
    throw ArgumentError("cohort shapes differ: " + std::to_string(x.rows) + "x" + std::to_string(x.cols) + " vs " +
                        std::to_string(xp.rows) + "x" + std::to_string(xp.cols));
  }
  if (x.cols != dirs.dim) throw ArgumentError("projection dimension does not match cohort width");
  if (x.rows == 0) throw ArgumentError("empty cohort");
}

}  // namespace

SlicedResult sw2(const Matrix& x, const Matrix& xp, const ProjectionSet& dirs) {
  check_shapes(x, xp, dirs);
  Projected px, pxp;
  kernels::parallel::project(x, dirs, px);
  kernels::parallel::project(xp, dirs, pxp);
  SlicedResult out;
  out.plans = sliced_plans(px, pxp);
  Projected sorted_ref = pxp;
  kernels::parallel::sort_slices(sorted_ref);
  out.per_projection.resize(dirs.count);
  kernels::parallel::slice_costs(px, sorted_ref, out.per_projection);
  double total = 0.0;
  for (double c : out.per_projection) total += c;
  out.cost = total / static_cast<double>(dirs.count);
  return out;
}

SlicedResult sw2(const CohortMatrix& x, const CohortMatrix& xp, const ProjectionSet& dirs) {
  return sw2(x.values(), xp.values(), dirs);
}

double band_half_width(std::size_t n, double alpha) {
  return std::sqrt(std::log(4.0 / alpha) / (2.0 * static_cast<double>(n)));
}

QuantileBand quantile_band(double u, std::size_t n, double alpha) {
  const double eps = band_half_width(n, alpha);
  return {std::max(0.0, u - eps), std::min(1.0, u + eps)};
}

void validate(const UclOptions& options) {
  if (!(options.delta > 0.0 && options.delta < 0.5)) throw ArgumentError("delta must lie in (0, 0.5)");
  if (!(options.alpha > 0.0 && options.alpha < 1.0)) throw ArgumentError("alpha must lie in (0, 1)");
  if (options.grid_size == 0) throw ArgumentError("grid_size must be positive");
}

namespace {

kernels::BandGrid grid_for(std::size_t n, const UclOptions& options) {
  return {options.delta, band_half_width(n, options.alpha), options.grid_size, options.square_integrand};
}

}  // namespace

double ucl_sorted(std::span<const double> sorted_y, std::span<const double> sorted_ystar,
                  const UclOptions& options) {
  return kernels::band_integral(sorted_y, sorted_ystar, grid_for(sorted_y.size(), options));
}

double sliced_ucl_sorted(const Projected& sorted_current, const Projected& sorted_factual,
                         const UclOptions& options) {
  std::vector<double> per(sorted_current.count);
  kernels::parallel::band_integrals(sorted_current, sorted_factual, grid_for(sorted_current.n, options), per);
  double total = 0.0;
  for (double v : per) total += v;
  return total / static_cast<double>(sorted_current.count);
}

UclResult ucl_w2(std::span<const double> y, std::span<const double> ystar, const UclOptions& options) {
  validate(options);
  const auto point = w2_1d(y, ystar);
  std::vector<double> sy(y.begin(), y.end()), sys(ystar.begin(), ystar.end());
  std::sort(sy.begin(), sy.end());
  std::sort(sys.begin(), sys.end());
  return {point.cost, ucl_sorted(sy, sys, options), options.delta, options.alpha, options.grid_size};
}

UclResult ucl_sw2(const Matrix& x, const Matrix& xp, const ProjectionSet& dirs, const UclOptions& options) {
  validate(options);
  check_shapes(x, xp, dirs);
  const auto point = sw2(x, xp, dirs);
  Projected px, pxp;
  kernels::parallel::project(x, dirs, px);
  kernels::parallel::project(xp, dirs, pxp);
  kernels::parallel::sort_slices(px);
  kernels::parallel::sort_slices(pxp);
  return {point.cost, sliced_ucl_sorted(px, pxp, options), options.delta, options.alpha, options.grid_size};
}

}  // namespace discover
