#include "discover/kernels.hpp"
#include "kernel_detail.hpp"

namespace discover::kernels {

double band_integral(std::span<const double> sorted_a, std::span<const double> sorted_b, const BandGrid& grid) {
  const double width = 1.0 - 2.0 * grid.delta;
  const double step = width / static_cast<double>(grid.points);
  double s = 0.0;
  for (std::size_t j = 0; j < grid.points; ++j) {
    const double u = grid.delta + (static_cast<double>(j) + 0.5) * step;
    const double hi = std::min(1.0, u + grid.half_width);
    const double lo = std::max(0.0, u - grid.half_width);
    const double d = std::max(empirical_quantile(sorted_a, hi) - empirical_quantile(sorted_b, lo),
                              empirical_quantile(sorted_b, hi) - empirical_quantile(sorted_a, lo));
    s += grid.squared ? d * d : d;
  }
  return s / static_cast<double>(grid.points);
}

namespace serial {

void project(const Matrix& x, const ProjectionSet& dirs, Projected& out) {
  out = Projected(dirs.count, x.rows);
  for (std::size_t k = 0; k < dirs.count; ++k) detail::project_slice(x, dirs, k, out.slice(k));
}

void project_rows(const Matrix& x, std::span<const std::size_t> rows, const ProjectionSet& dirs,
                  Projected& out) {
  out = Projected(dirs.count, rows.size());
  for (std::size_t k = 0; k < dirs.count; ++k) detail::project_slice_rows(x, rows, dirs, k, out.slice(k));
}

void sort_slices(Projected& p) {
  for (std::size_t k = 0; k < p.count; ++k) {
    auto s = p.slice(k);
    std::sort(s.begin(), s.end());
  }
}

void argsort_slices(const Projected& p, std::vector<std::uint32_t>& order) {
  order.resize(p.count * p.n);
  for (std::size_t k = 0; k < p.count; ++k) {
    detail::argsort_slice(p.slice(k), std::span<std::uint32_t>(order.data() + k * p.n, p.n));
  }
}

void slice_costs(const Projected& current, const Projected& sorted_ref, std::span<double> costs) {
  std::vector<double> scratch;
  for (std::size_t k = 0; k < current.count; ++k) {
    costs[k] = detail::sorted_cost(current.slice(k), sorted_ref.slice(k), scratch);
  }
}

void band_integrals(const Projected& sorted_a, const Projected& sorted_b, const BandGrid& grid,
                    std::span<double> out) {
  for (std::size_t k = 0; k < sorted_a.count; ++k) out[k] = band_integral(sorted_a.slice(k), sorted_b.slice(k), grid);
}

void guidance_rows(const ProjectionSet& dirs, const Projected& current, const Projected& ref,
                   const PlanTable& plans, std::span<const std::size_t> rows, double scale, Matrix& out) {
  out = Matrix(rows.size(), dirs.dim);
  for (std::size_t j = 0; j < rows.size(); ++j) {
    detail::guidance_row(dirs, current, ref, plans, rows[j], scale, out.row(j));
  }
}

void kernel_row_sums(const Matrix& a, const Matrix& b, double inv_two_sigma_sq, bool skip_diagonal,
                     std::span<double> out) {
  for (std::size_t i = 0; i < a.rows; ++i) out[i] = detail::kernel_row_sum(a, b, inv_two_sigma_sq, skip_diagonal, i);
}

void pairwise_distances(const Matrix& f, std::vector<double>& out) {
  const std::size_t m = f.rows;
  out.resize(m < 2 ? 0 : m * (m - 1) / 2);
  for (std::size_t i = 0; i + 1 < m; ++i) detail::distances_from(f, i, out.data() + detail::pair_offset(i, m));
}

}  // namespace serial
}  // namespace discover::kernels
