#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "discover/predict.hpp"
#include "discover/projection.hpp"
#include "discover/tabular.hpp"

namespace testing_support {

using discover::Matrix;

inline Matrix random_matrix(std::size_t n, std::size_t d, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(n, d);
  for (double& v : m.data) v = u(rng);
  return m;
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

inline std::shared_ptr<const discover::Schema> numeric_schema(std::size_t d, double lo = -1.0, double hi = 1.0) {
  std::vector<discover::FeatureSchema> f;
  for (std::size_t p = 0; p < d; ++p) f.push_back(discover::numerical_feature("x" + std::to_string(p), lo, hi));
  return std::make_shared<const discover::Schema>(std::move(f));
}

// Squared 1D transport cost computed the textbook way: sort copies, pair
// order statistics.
inline double sorted_cost(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

inline std::vector<double> project_column(const Matrix& x, std::span<const double> theta) {
  std::vector<double> out(x.rows, 0.0);
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t p = 0; p < x.cols; ++p) out[i] += theta[p] * x(i, p);
  }
  return out;
}

inline double sliced_cost(const Matrix& x, const Matrix& xp, const discover::ProjectionSet& dirs) {
  double s = 0.0;
  for (std::size_t k = 0; k < dirs.count; ++k) {
    s += sorted_cost(project_column(x, dirs.direction(k)), project_column(xp, dirs.direction(k)));
  }
  return s / static_cast<double>(dirs.count);
}

// Asymptotic Kolmogorov distribution tail Pr(K > t).
inline double kolmogorov_tail(double t) {
  if (t < 1e-3) return 1.0;
  double s = 0.0;
  for (int j = 1; j <= 200; ++j) {
    const double term = std::exp(-2.0 * j * j * t * t);
    s += (j % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

// One-sample KS p-value of `samples` against Uniform[lo, hi].
inline double ks_uniform_pvalue(std::vector<double> samples, double lo, double hi) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = std::clamp((samples[i] - lo) / (hi - lo), 0.0, 1.0);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  const double sn = std::sqrt(n);
  return kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d);
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("discover_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// Counts calls and rows so tests can check what the solver asks for.
class CountingPredictor final : public discover::Predictor {
 public:
  explicit CountingPredictor(discover::PredictorPtr inner) : inner_(std::move(inner)) {}
  std::vector<double> predict(const Matrix& rows) const override {
    ++calls;
    rows_seen += rows.rows;
    return inner_->predict(rows);
  }
  nlohmann::json to_json() const override { return inner_->to_json(); }
  mutable std::size_t calls = 0;
  mutable std::size_t rows_seen = 0;

 private:
  discover::PredictorPtr inner_;
};

}  // namespace testing_support
