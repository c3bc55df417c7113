#include <omp.h>

#include "discover/kernels.hpp"
#include "kernel_detail.hpp"

namespace discover::kernels {

void set_thread_count(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

int thread_count() { return omp_get_max_threads(); }

namespace parallel {

namespace {
long long as_index(std::size_t n) { return static_cast<long long>(n); }
}  // namespace

void project(const Matrix& x, const ProjectionSet& dirs, Projected& out) {
  out = Projected(dirs.count, x.rows);
#pragma omp parallel for schedule(static)
  for (long long k = 0; k < as_index(dirs.count); ++k) {
    detail::project_slice(x, dirs, static_cast<std::size_t>(k), out.slice(static_cast<std::size_t>(k)));
  }
}

void project_rows(const Matrix& x, std::span<const std::size_t> rows, const ProjectionSet& dirs,
                  Projected& out) {
  out = Projected(dirs.count, rows.size());
#pragma omp parallel for schedule(static)
  for (long long k = 0; k < as_index(dirs.count); ++k) {
    detail::project_slice_rows(x, rows, dirs, static_cast<std::size_t>(k), out.slice(static_cast<std::size_t>(k)));
  }
}

void sort_slices(Projected& p) {
#pragma omp parallel for schedule(static)
  for (long long k = 0; k < as_index(p.count); ++k) {
    auto s = p.slice(static_cast<std::size_t>(k));
    std::sort(s.begin(), s.end());
  }
}

void argsort_slices(const Projected& p, std::vector<std::uint32_t>& order) {
  order.resize(p.count * p.n);
#pragma omp parallel for schedule(static)
  for (long long k = 0; k < as_index(p.count); ++k) {
    const auto kk = static_cast<std::size_t>(k);
    detail::argsort_slice(p.slice(kk), std::span<std::uint32_t>(order.data() + kk * p.n, p.n));
  }
}

void slice_costs(const Projected& current, const Projected& sorted_ref, std::span<double> costs) {
#pragma omp parallel
  {
    std::vector<double> scratch;
#pragma omp for schedule(static)
    for (long long k = 0; k < as_index(current.count); ++k) {
      const auto kk = static_cast<std::size_t>(k);
      costs[kk] = detail::sorted_cost(current.slice(kk), sorted_ref.slice(kk), scratch);
    }
  }
}

void band_integrals(const Projected& sorted_a, const Projected& sorted_b, const BandGrid& grid,
                    std::span<double> out) {
#pragma omp parallel for schedule(static)
  for (long long k = 0; k < as_index(sorted_a.count); ++k) {
    const auto kk = static_cast<std::size_t>(k);
    out[kk] = band_integral(sorted_a.slice(kk), sorted_b.slice(kk), grid);
  }
}

void guidance_rows(const ProjectionSet& dirs, const Projected& current, const Projected& ref,
                   const PlanTable& plans, std::span<const std::size_t> rows, double scale, Matrix& out) {
  out = Matrix(rows.size(), dirs.dim);
#pragma omp parallel for schedule(static)
  for (long long j = 0; j < as_index(rows.size()); ++j) {
    const auto jj = static_cast<std::size_t>(j);
    detail::guidance_row(dirs, current, ref, plans, rows[jj], scale, out.row(jj));
  }
}

void kernel_row_sums(const Matrix& a, const Matrix& b, double inv_two_sigma_sq, bool skip_diagonal,
                     std::span<double> out) {
#pragma omp parallel for schedule(dynamic, 16)
  for (long long i = 0; i < as_index(a.rows); ++i) {
    out[static_cast<std::size_t>(i)] =
        detail::kernel_row_sum(a, b, inv_two_sigma_sq, skip_diagonal, static_cast<std::size_t>(i));
  }
}

void pairwise_distances(const Matrix& f, std::vector<double>& out) {
  const std::size_t m = f.rows;
  out.resize(m < 2 ? 0 : m * (m - 1) / 2);
#pragma omp parallel for schedule(dynamic, 16)
  for (long long i = 0; i < as_index(m > 0 ? m - 1 : 0); ++i) {
    const auto ii = static_cast<std::size_t>(i);
    detail::distances_from(f, ii, out.data() + detail::pair_offset(ii, m));
  }
}

}  // namespace parallel
}  // namespace discover::kernels
