#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "discover/kernels.hpp"
#include "discover/transport.hpp"
#include "helpers.hpp"

using namespace discover;
using namespace testing_support;

namespace {

struct Inputs {
  Matrix x, xp;
  ProjectionSet dirs;
  Inputs() {
    std::mt19937_64 rng(4);
    x = random_matrix(301, 7, rng);
    xp = random_matrix(301, 7, rng, -0.5, 1.5);
    dirs = sample_projections(7, 37, 2);
  }
};

class ThreadCounts : public ::testing::TestWithParam<int> {
 protected:
  void SetUp() override {
    saved_ = kernels::thread_count();
    kernels::set_thread_count(GetParam());
  }
  void TearDown() override { kernels::set_thread_count(saved_); }
  int saved_ = 1;
};

}  // namespace

TEST_P(ThreadCounts, ParallelKernelsMatchSerialBitForBit) {
  const Inputs in;
  Projected ps, pp;
  kernels::serial::project(in.x, in.dirs, ps);
  kernels::parallel::project(in.x, in.dirs, pp);
  EXPECT_EQ(ps.values, pp.values);

  Projected fs, fp;
  kernels::serial::project(in.xp, in.dirs, fs);
  kernels::parallel::project(in.xp, in.dirs, fp);

  const std::vector<std::size_t> rows{0, 5, 77, 300};
  Projected rs, rp;
  kernels::serial::project_rows(in.x, rows, in.dirs, rs);
  kernels::parallel::project_rows(in.x, rows, in.dirs, rp);
  EXPECT_EQ(rs.values, rp.values);

  std::vector<std::uint32_t> os, op;
  kernels::serial::argsort_slices(ps, os);
  kernels::parallel::argsort_slices(ps, op);
  EXPECT_EQ(os, op);

  Projected ss = fs, sp = fs;
  kernels::serial::sort_slices(ss);
  kernels::parallel::sort_slices(sp);
  EXPECT_EQ(ss.values, sp.values);

  std::vector<double> cs(in.dirs.count), cp(in.dirs.count);
  kernels::serial::slice_costs(ps, ss, cs);
  kernels::parallel::slice_costs(ps, ss, cp);
  EXPECT_EQ(cs, cp);

  Projected xs = ps;
  kernels::serial::sort_slices(xs);
  const kernels::BandGrid grid{0.05, band_half_width(301, 0.1), 100, true};
  std::vector<double> bs(in.dirs.count), bp(in.dirs.count);
  kernels::serial::band_integrals(xs, ss, grid, bs);
  kernels::parallel::band_integrals(xs, ss, grid, bp);
  EXPECT_EQ(bs, bp);

  const auto plans = sliced_plans(ps, fs);
  std::vector<std::size_t> all(301);
  std::iota(all.begin(), all.end(), 0);
  Matrix gs, gp;
  kernels::serial::guidance_rows(in.dirs, ps, fs, plans, all, 0.5, gs);
  kernels::parallel::guidance_rows(in.dirs, ps, fs, plans, all, 0.5, gp);
  EXPECT_EQ(gs, gp);

  std::vector<double> ks(301), kp(301);
  kernels::serial::kernel_row_sums(in.x, in.xp, 0.7, false, ks);
  kernels::parallel::kernel_row_sums(in.x, in.xp, 0.7, false, kp);
  EXPECT_EQ(ks, kp);
  kernels::serial::kernel_row_sums(in.x, in.x, 0.7, true, ks);
  kernels::parallel::kernel_row_sums(in.x, in.x, 0.7, true, kp);
  EXPECT_EQ(ks, kp);

  std::vector<double> ds, dp;
  kernels::serial::pairwise_distances(in.x, ds);
  kernels::parallel::pairwise_distances(in.x, dp);
  EXPECT_EQ(ds, dp);
  EXPECT_EQ(ds.size(), 301u * 300u / 2);
}

INSTANTIATE_TEST_SUITE_P(Threads, ThreadCounts, ::testing::Values(1, 2, 3, 8));

TEST(Kernels, EmpiricalQuantileIsRightContinuous) {
  const std::vector<double> s{1, 2, 3, 4};
  EXPECT_EQ(kernels::empirical_quantile(s, 0.0), 1.0);
  EXPECT_EQ(kernels::empirical_quantile(s, 0.25), 2.0);
  EXPECT_EQ(kernels::empirical_quantile(s, 0.2499), 1.0);
  EXPECT_EQ(kernels::empirical_quantile(s, 1.0), 4.0);
  EXPECT_EQ(kernels::empirical_quantile(s, -0.3), 1.0);
}

TEST(Kernels, SliceCostsMatchSortedOracle) {
  const Inputs in;
  Projected p, f;
  kernels::serial::project(in.x, in.dirs, p);
  kernels::serial::project(in.xp, in.dirs, f);
  Projected fs = f;
  kernels::serial::sort_slices(fs);
  std::vector<double> c(in.dirs.count);
  kernels::serial::slice_costs(p, fs, c);
  for (std::size_t k = 0; k < in.dirs.count; ++k) {
    const auto a = p.slice(k);
    const auto b = f.slice(k);
    EXPECT_NEAR(c[k], sorted_cost({a.begin(), a.end()}, {b.begin(), b.end()}), 1e-13);
  }
}

TEST(Kernels, BandIntegralOfIdenticalSamplesIsSmallButPositive) {
  std::vector<double> a(200);
  std::iota(a.begin(), a.end(), 0.0);
  const kernels::BandGrid grid{0.05, band_half_width(200, 0.1), 100, true};
  const double v = kernels::band_integral(a, a, grid);
  EXPECT_GT(v, 0.0);
  const kernels::BandGrid zero{0.05, 0.0, 100, true};
  EXPECT_EQ(kernels::band_integral(a, a, zero), 0.0);
}
