#include <gtest/gtest.h>

#include <chrono>
#include <numeric>
#include <random>

#include "discover/error.hpp"
#include "discover/guidance.hpp"
#include "discover/transport.hpp"
#include "helpers.hpp"

using namespace discover;
using namespace testing_support;

namespace {

// Q_x with the matching held fixed: (1/(N n)) sum_k sum_i (theta_k.(x_i - x'_{plan_k(i)}))^2
double frozen_qx(const Matrix& x, const Matrix& xp, const ProjectionSet& dirs, const PlanTable& plans) {
  const std::size_t n = x.rows;
  double s = 0.0;
  for (std::size_t k = 0; k < dirs.count; ++k) {
    const auto th = dirs.direction(k);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = plans[k * n + i];
      double r = 0.0;
      for (std::size_t p = 0; p < x.cols; ++p) r += th[p] * (x(i, p) - xp(j, p));
      s += r * r;
    }
  }
  return s / static_cast<double>(dirs.count * n);
}

}  // namespace

TEST(Guidance, HandExample) {
  Matrix x(1, 2), xp(1, 2);
  x(0, 0) = 3;
  xp(0, 0) = 1;
  const ProjectionSet e1{2, 1, 0, {1.0, 0.0}};
  const std::vector<std::size_t> rows{0};
  const auto g = guidance(x, xp, e1, sw2(x, xp, e1).plans, rows);
  EXPECT_DOUBLE_EQ(g.vectors(0, 0), 4.0);
  EXPECT_DOUBLE_EQ(g.vectors(0, 1), 0.0);
}

TEST(Guidance, ZeroAtFactual) {
  std::mt19937_64 rng(1);
  const auto x = random_matrix(25, 4, rng);
  const auto dirs = sample_projections(4, 30, 3);
  std::vector<std::size_t> rows(25);
  std::iota(rows.begin(), rows.end(), 0);
  const auto g = guidance(x, x, dirs, sw2(x, x, dirs).plans, rows);
  for (double v : g.vectors.data) EXPECT_EQ(v, 0.0);
}

TEST(Guidance, OnlyRequestedRowsStored) {
  std::mt19937_64 rng(1);
  const auto x = random_matrix(10, 3, rng);
  const auto xp = random_matrix(10, 3, rng);
  const auto dirs = sample_projections(3, 5, 3);
  const std::vector<std::size_t> rows{7, 2};
  const auto g = guidance(x, xp, dirs, sw2(x, xp, dirs).plans, rows);
  EXPECT_TRUE(g.at(7).has_value());
  EXPECT_TRUE(g.at(2).has_value());
  EXPECT_FALSE(g.at(3).has_value());
  const std::vector<std::size_t> bad{10};
  EXPECT_THROW(guidance(x, xp, dirs, sw2(x, xp, dirs).plans, bad), ArgumentError);
}

TEST(Guidance, MatchesFiniteDifferences) {
  std::mt19937_64 rng(123);
  std::uniform_int_distribution<int> nd(2, 40), dd(1, 6), kd(1, 20);
  for (int t = 0; t < 100; ++t) {
    const auto n = static_cast<std::size_t>(nd(rng));
    const auto d = static_cast<std::size_t>(dd(rng));
    const auto dirs = sample_projections(d, static_cast<std::size_t>(kd(rng)), static_cast<std::uint64_t>(t));
    auto x = random_matrix(n, d, rng, -1, 2);
    const auto xp = random_matrix(n, d, rng, -2, 1);
    const auto plans = sw2(x, xp, dirs).plans;
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    const auto g = guidance(x, xp, dirs, plans, rows);
    const double h = 1e-5;
    for (std::size_t i = 0; i < n; ++i) {
      double err = 0.0, mag = 0.0;
      for (std::size_t p = 0; p < d; ++p) {
        const double keep = x(i, p);
        x(i, p) = keep + h;
        const double up = frozen_qx(x, xp, dirs, plans);
        x(i, p) = keep - h;
        const double down = frozen_qx(x, xp, dirs, plans);
        x(i, p) = keep;
        const double fd = (up - down) / (2 * h);
        err += (fd - g.vectors(i, p)) * (fd - g.vectors(i, p));
        mag += g.vectors(i, p) * g.vectors(i, p);
      }
      if (mag > 1e-20) EXPECT_LE(std::sqrt(err / mag), 1e-5) << "instance " << t << " row " << i;
    }
  }
}

TEST(Guidance, NegativeFieldIsDescentDirection) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 50; ++t) {
    const auto x = random_matrix(20, 3, rng);
    const auto xp = random_matrix(20, 3, rng, 0, 2);
    const auto dirs = sample_projections(3, 10, static_cast<std::uint64_t>(t));
    const auto plans = sw2(x, xp, dirs).plans;
    std::vector<std::size_t> rows(20);
    std::iota(rows.begin(), rows.end(), 0);
    const auto g = guidance(x, xp, dirs, plans, rows);
    Matrix moved = x;
    for (std::size_t k = 0; k < moved.data.size(); ++k) moved.data[k] -= 1e-6 * g.vectors.data[k];
    EXPECT_LE(frozen_qx(moved, xp, dirs, plans), frozen_qx(x, xp, dirs, plans));
  }
}

TEST(Guidance, SparseCostScalesWithRowCount) {
  std::mt19937_64 rng(9);
  const std::size_t n = 4000, k = 400;
  const auto x = random_matrix(n, 8, rng);
  const auto xp = random_matrix(n, 8, rng, 0, 1);
  const auto dirs = sample_projections(8, 100, 1);
  Projected px, pxp;
  px = Projected(dirs.count, n);
  pxp = Projected(dirs.count, n);
  for (std::size_t s = 0; s < dirs.count; ++s) {
    const auto a = project_column(x, dirs.direction(s));
    const auto b = project_column(xp, dirs.direction(s));
    std::copy(a.begin(), a.end(), px.slice(s).begin());
    std::copy(b.begin(), b.end(), pxp.slice(s).begin());
  }
  const auto plans = sliced_plans(px, pxp);
  std::vector<std::size_t> all(n), some(k);
  std::iota(all.begin(), all.end(), 0);
  for (std::size_t j = 0; j < k; ++j) some[j] = j * (n / k);
  auto best_time = [&](const std::vector<std::size_t>& rows) {
    double best = 1e30;
    for (int rep = 0; rep < 7; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto g = guidance(px, pxp, dirs, plans, rows);
      const auto t1 = std::chrono::steady_clock::now();
      EXPECT_EQ(g.rows.size(), rows.size());
      best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
    }
    return best;
  };
  const double ratio = best_time(some) / best_time(all);
  EXPECT_LE(ratio, 3.0 * static_cast<double>(k) / static_cast<double>(n));
}
