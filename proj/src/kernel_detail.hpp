#pragma once

// Per-element bodies shared by the serial and OpenMP kernels. Both drivers
// call these with identical arguments, which is what makes their outputs
// bit-identical.

#include <algorithm>
#include <cmath>
#include <numeric>

#include "discover/kernels.hpp"

namespace discover::kernels::detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t p = 0; p < a.size(); ++p) s += a[p] * b[p];
  return s;
}

inline void project_slice(const Matrix& x, const ProjectionSet& dirs, std::size_t k, std::span<double> out) {
  const auto theta = dirs.direction(k);
  for (std::size_t i = 0; i < x.rows; ++i) out[i] = dot(theta, x.row(i));
}

inline void project_slice_rows(const Matrix& x, std::span<const std::size_t> rows, const ProjectionSet& dirs,
                               std::size_t k, std::span<double> out) {
  const auto theta = dirs.direction(k);
  for (std::size_t j = 0; j < rows.size(); ++j) out[j] = dot(theta, x.row(rows[j]));
}

inline void argsort_slice(std::span<const double> values, std::span<std::uint32_t> order) {
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return values[a] < values[b]; });
}

inline double sorted_cost(std::span<const double> current, std::span<const double> sorted_ref,
                          std::vector<double>& scratch) {
  scratch.assign(current.begin(), current.end());
  std::sort(scratch.begin(), scratch.end());
  double s = 0.0;
  for (std::size_t r = 0; r < scratch.size(); ++r) {
    const double diff = scratch[r] - sorted_ref[r];
    s += diff * diff;
  }
  return s / static_cast<double>(scratch.size());
}

inline void guidance_row(const ProjectionSet& dirs, const Projected& current, const Projected& ref,
                         const PlanTable& plans, std::size_t i, double scale, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  const std::size_t n = current.n;
  for (std::size_t k = 0; k < dirs.count; ++k) {
    const double residual = current.values[k * n + i] - ref.values[k * n + plans[k * n + i]];
    const auto theta = dirs.direction(k);
    for (std::size_t p = 0; p < out.size(); ++p) out[p] += theta[p] * residual;
  }
  for (double& v : out) v *= scale;
}

inline double kernel_row_sum(const Matrix& a, const Matrix& b, double inv_two_sigma_sq, bool skip_diagonal,
                             std::size_t i) {
  const auto ai = a.row(i);
  double s = 0.0;
  for (std::size_t j = 0; j < b.rows; ++j) {
    if (skip_diagonal && j == i) continue;
    const auto bj = b.row(j);
    double d2 = 0.0;
    for (std::size_t p = 0; p < ai.size(); ++p) {
      const double diff = ai[p] - bj[p];
      d2 += diff * diff;
    }
    s += std::exp(-d2 * inv_two_sigma_sq);
  }
  return s;
}

// Offset of pair (i, i+1) in the packed upper triangle of an m x m matrix.
inline std::size_t pair_offset(std::size_t i, std::size_t m) { return i * (2 * m - i - 1) / 2; }

inline void distances_from(const Matrix& f, std::size_t i, double* out) {
  const auto fi = f.row(i);
  for (std::size_t j = i + 1; j < f.rows; ++j) {
    const auto fj = f.row(j);
    double d2 = 0.0;
    for (std::size_t p = 0; p < fi.size(); ++p) {
      const double diff = fi[p] - fj[p];
      d2 += diff * diff;
    }
    *out++ = std::sqrt(d2);
  }
}

}  // namespace discover::kernels::detail
