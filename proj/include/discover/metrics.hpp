#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "discover/projection.hpp"
#include "discover/tabular.hpp"
#include "json.hpp"

namespace discover {

struct MetricsReport {
  double ot_x_sq = 0.0;
  double ot_x = 0.0;
  double ot_y_sq = 0.0;
  double ot_y = 0.0;
  double mmd = 0.0;
  std::vector<double> per_sample_otx;  // sums to ot_x_sq
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t projections = 0;
  std::uint64_t seed = 0;

  // Keys: ot_x, ot_x_sq, ot_y, ot_y_sq, mmd, n, d, N_projections, seed.
  nlohmann::json to_json() const;
};

MetricsReport evaluate(const CohortMatrix& x, const CohortMatrix& xp, std::span<const double> y,
                       std::span<const double> ystar, const ProjectionSet& dirs);

// Unbiased MMD estimate (clipped at zero, then square-rooted) with a Gaussian
// kernel on standardized numerical columns plus one-hot categoricals. The
// bandwidth is the median pairwise distance of the pooled sample.
double mmd(const CohortMatrix& a, const CohortMatrix& b);

// Two-column CSV "value,cdf". Tied values collapse to one row at their last
// cumulative position.
void export_cdf(std::span<const double> values, const std::filesystem::path& path);
std::string cdf_csv(std::span<const double> values);

}  // namespace discover
