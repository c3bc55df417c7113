#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "discover/projection.hpp"
#include "discover/tabular.hpp"

// Hot loops of the solver. Each kernel exists twice with identical signatures:
// `serial` is the straightforward reference, `parallel` splits the outer loop
// across OpenMP threads. Every output element is computed by exactly one
// iteration with the same arithmetic in both versions, and reductions across
// elements are left to the caller, so results are bit-identical for any
// thread count.
namespace discover::kernels {

// Quadrature parameters for the trimmed quantile-band integral.
struct BandGrid {
  double delta = 0.05;
  double half_width = 0.0;  // band half-width epsilon_n
  std::size_t points = 100;
  bool squared = true;
};

namespace serial {

void project(const Matrix& x, const ProjectionSet& dirs, Projected& out);
// Projects only `rows`, writing slice k entry j for rows[j].
void project_rows(const Matrix& x, std::span<const std::size_t> rows, const ProjectionSet& dirs,
                  Projected& out);
void sort_slices(Projected& p);
// Stable argsort of each slice; order[k*n + r] is the row holding rank r.
void argsort_slices(const Projected& p, std::vector<std::uint32_t>& order);
// costs[k] = (1/n) sum_r (sort(current_k)[r] - sorted_ref_k[r])^2
void slice_costs(const Projected& current, const Projected& sorted_ref, std::span<double> costs);
void band_integrals(const Projected& sorted_a, const Projected& sorted_b, const BandGrid& grid,
                    std::span<double> out);
// out row j = scale * sum_k theta_k (theta_k.x_i - theta_k.x'_{plan_k(i)}), i = rows[j]
void guidance_rows(const ProjectionSet& dirs, const Projected& current, const Projected& ref,
                   const PlanTable& plans, std::span<const std::size_t> rows, double scale, Matrix& out);
// out[i] = sum_j exp(-|a_i - b_j|^2 * inv_two_sigma_sq), optionally skipping j == i.
void kernel_row_sums(const Matrix& a, const Matrix& b, double inv_two_sigma_sq, bool skip_diagonal,
                     std::span<double> out);
// Upper-triangle Euclidean distances, row-major over pairs i < j.
void pairwise_distances(const Matrix& f, std::vector<double>& out);

}  // namespace serial

// Same contracts as the serial versions.
namespace parallel {

void project(const Matrix& x, const ProjectionSet& dirs, Projected& out);
void project_rows(const Matrix& x, std::span<const std::size_t> rows, const ProjectionSet& dirs,
                  Projected& out);
void sort_slices(Projected& p);
void argsort_slices(const Projected& p, std::vector<std::uint32_t>& order);
void slice_costs(const Projected& current, const Projected& sorted_ref, std::span<double> costs);
void band_integrals(const Projected& sorted_a, const Projected& sorted_b, const BandGrid& grid,
                    std::span<double> out);
void guidance_rows(const ProjectionSet& dirs, const Projected& current, const Projected& ref,
                   const PlanTable& plans, std::span<const std::size_t> rows, double scale, Matrix& out);
void kernel_row_sums(const Matrix& a, const Matrix& b, double inv_two_sigma_sq, bool skip_diagonal,
                     std::span<double> out);
void pairwise_distances(const Matrix& f, std::vector<double>& out);

}  // namespace parallel

// Right-continuous empirical quantile of sorted samples:
// sorted[min(n-1, floor(n*q))].
inline double empirical_quantile(std::span<const double> sorted, double q) {
  const std::size_t n = sorted.size();
  double pos = q * static_cast<double>(n);
  if (pos < 0) pos = 0;
  auto idx = static_cast<std::size_t>(pos);
  if (idx >= n) idx = n - 1;
  return sorted[idx];
}

// Mean over the midpoint grid on [delta, 1-delta] of D(u) (or D(u)^2), i.e.
// (1/(1-2 delta)) * integral, for two sorted samples of equal size.
double band_integral(std::span<const double> sorted_a, std::span<const double> sorted_b, const BandGrid& grid);

void set_thread_count(int threads);
int thread_count();

}  // namespace discover::kernels
