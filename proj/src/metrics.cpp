#include "discover/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "discover/error.hpp"
#include "discover/kernels.hpp"
#include "discover/objective.hpp"
#include "discover/transport.hpp"

namespace discover {

nlohmann::json MetricsReport::to_json() const {
  return {{"ot_x", ot_x}, {"ot_x_sq", ot_x_sq}, {"ot_y", ot_y},         {"ot_y_sq", ot_y_sq}, {"mmd", mmd},
          {"n", n},       {"d", d},             {"N_projections", projections}, {"seed", seed}};
}

MetricsReport evaluate(const CohortMatrix& x, const CohortMatrix& xp, std::span<const double> y,
                       std::span<const double> ystar, const ProjectionSet& dirs) {
  if (x.row_count() != xp.row_count()) {
    throw ArgumentError("cohort sizes differ: counterfactual has " + std::to_string(x.row_count()) +
                        " rows, factual has " + std::to_string(xp.row_count()));
  }
  if (y.size() != x.row_count() || ystar.size() != x.row_count()) {
    throw ArgumentError("output vectors must have one value per row (" + std::to_string(x.row_count()) +
                        "), got " + std::to_string(y.size()) + " and " + std::to_string(ystar.size()));
  }
  MetricsReport r;
  const auto sliced = sw2(x, xp, dirs);
  r.ot_x_sq = sliced.cost;
  r.ot_x = std::sqrt(r.ot_x_sq);
  r.ot_y_sq = w2_1d(y, ystar).cost;
  r.ot_y = std::sqrt(r.ot_y_sq);
  r.per_sample_otx = row_scores_input(x.values(), xp.values(), dirs, sliced.plans);
  r.mmd = mmd(x, xp);
  r.n = x.row_count();
  r.d = x.dim();
  r.projections = dirs.count;
  r.seed = dirs.seed;
  return r;
}

namespace {

// Standardized numerical columns followed by one-hot blocks, with statistics
// taken over the pooled sample.
std::pair<Matrix, Matrix> kernel_features(const CohortMatrix& a, const CohortMatrix& b) {
  const Schema& schema = a.schema();
  std::size_t width = 0;
  for (const auto& f : schema.features()) width += f.numerical() ? 1 : f.cardinality();
  const std::size_t na = a.row_count(), nb = b.row_count();
  Matrix fa(na, width), fb(nb, width);
  std::size_t col = 0;
  for (std::size_t p = 0; p < schema.size(); ++p) {
    const auto& f = schema[p];
    if (f.numerical()) {
      // Per-cohort partial sums keep the statistics symmetric in (a, b).
      double sa = 0.0, sb = 0.0;
      for (std::size_t i = 0; i < na; ++i) sa += a.row(i)[p];
      for (std::size_t i = 0; i < nb; ++i) sb += b.row(i)[p];
      const double mean = (sa + sb) / static_cast<double>(na + nb);
      double va = 0.0, vb = 0.0;
      for (std::size_t i = 0; i < na; ++i) va += (a.row(i)[p] - mean) * (a.row(i)[p] - mean);
      for (std::size_t i = 0; i < nb; ++i) vb += (b.row(i)[p] - mean) * (b.row(i)[p] - mean);
      const double var = (va + vb) / static_cast<double>(na + nb);
      const double scale = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
      for (std::size_t i = 0; i < na; ++i) fa(i, col) = (a.row(i)[p] - mean) * scale;
      for (std::size_t i = 0; i < nb; ++i) fb(i, col) = (b.row(i)[p] - mean) * scale;
      ++col;
    } else {
      for (std::size_t i = 0; i < na; ++i) fa(i, col + static_cast<std::size_t>(a.row(i)[p])) = 1.0;
      for (std::size_t i = 0; i < nb; ++i) fb(i, col + static_cast<std::size_t>(b.row(i)[p])) = 1.0;
      col += f.cardinality();
    }
  }
  return {std::move(fa), std::move(fb)};
}

double sum_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

double mmd(const CohortMatrix& a, const CohortMatrix& b) {
  if (a.row_count() < 2 || b.row_count() < 2) throw ArgumentError("mmd needs at least 2 rows in each cohort");
  if (a.schema().to_json() != b.schema().to_json()) throw ArgumentError("mmd: cohorts use different schemas");
  const auto [fa, fb] = kernel_features(a, b);

  Matrix pooled(fa.rows + fb.rows, fa.cols);
  std::copy(fa.data.begin(), fa.data.end(), pooled.data.begin());
  std::copy(fb.data.begin(), fb.data.end(), pooled.data.begin() + static_cast<std::ptrdiff_t>(fa.data.size()));
  std::vector<double> dist;
  kernels::parallel::pairwise_distances(pooled, dist);
  const std::size_t mid = dist.size() / 2;
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid), dist.end());
  double median = dist[mid];
  if (dist.size() % 2 == 0) {
    const double lower = *std::max_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (median + lower);
  }
  const double sigma = median > 0.0 ? median : 1.0;
  const double inv = 1.0 / (2.0 * sigma * sigma);

  const double na = static_cast<double>(fa.rows), nb = static_cast<double>(fb.rows);
  std::vector<double> raa(fa.rows), rbb(fb.rows), rab(fa.rows), rba(fb.rows);
  kernels::parallel::kernel_row_sums(fa, fa, inv, true, raa);
  kernels::parallel::kernel_row_sums(fb, fb, inv, true, rbb);
  kernels::parallel::kernel_row_sums(fa, fb, inv, false, rab);
  kernels::parallel::kernel_row_sums(fb, fa, inv, false, rba);
  // Averaging both orientations of the cross term makes mmd(a, b) and
  // mmd(b, a) bit-identical.
  const double cross = 0.5 * (sum_of(rab) + sum_of(rba)) / (na * nb);
  const double m2 = sum_of(raa) / (na * (na - 1.0)) + sum_of(rbb) / (nb * (nb - 1.0)) - 2.0 * cross;
  return std::sqrt(std::max(0.0, m2));
}

std::string cdf_csv(std::span<const double> values) {
  if (values.empty()) throw ArgumentError("export_cdf: no values");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  std::string out = "value,cdf\n";
  for (std::size_t i = 0; i < n; ++i) {
    if (i + 1 < n && sorted[i + 1] == sorted[i]) continue;
    out += format_double(sorted[i]) + ',' + format_double(static_cast<double>(i + 1) / static_cast<double>(n)) + '\n';
  }
  return out;
}

void export_cdf(std::span<const double> values, const std::filesystem::path& path) {
  const std::string text = cdf_csv(values);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace discover
