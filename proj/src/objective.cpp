#include "discover/objective.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "discover/error.hpp"
#include "discover/kernels.hpp"

namespace discover {

std::vector<double> row_scores_input(const Projected& current, const Projected& factual, const PlanTable& plans) {
  const std::size_t n = current.n;
  const std::size_t count = current.count;
  if (factual.n != n || factual.count != count || plans.size() != n * count) {
    throw ArgumentError("row_scores_input: plans do not match the projected cohorts");
  }
  const double scale = 1.0 / (static_cast<double>(count) * static_cast<double>(n));
  std::vector<double> q(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
      const std::uint32_t j = plans[k * n + i];
      if (j >= n) throw ArgumentError("row_scores_input: plan entry out of range");
      const double diff = current.values[k * n + i] - factual.values[k * n + j];
      s += diff * diff;
    }
    q[i] = s * scale;
  }
  return q;
}

std::vector<double> row_scores_input(const Matrix& x, const Matrix& xp, const ProjectionSet& dirs,
                                     const PlanTable& plans) {
  if (x.rows != xp.rows || x.cols != xp.cols || x.cols != dirs.dim) {
    throw ArgumentError("row_scores_input: shape mismatch");
  }
  Projected px, pxp;
  kernels::parallel::project(x, dirs, px);
  kernels::parallel::project(xp, dirs, pxp);
  return row_scores_input(px, pxp, plans);
}

std::vector<double> row_scores_output(std::span<const double> y, std::span<const double> ystar,
                                      std::span<const std::size_t> plan) {
  const std::size_t n = y.size();
  if (ystar.size() != n || plan.size() != n) throw ArgumentError("row_scores_output: shape mismatch");
  std::vector<double> q(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (plan[i] >= n) throw ArgumentError("row_scores_output: plan entry out of range");
    const double diff = y[i] - ystar[plan[i]];
    q[i] = diff * diff / static_cast<double>(n);
  }
  return q;
}

ImpactScores combine(std::span<const double> qx, std::span<const double> qy, double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw ArgumentError("combine: eta must lie in [0, 1]");
  if (qx.size() != qy.size()) throw ArgumentError("combine: score vectors differ in length");
  ImpactScores out;
  out.qx.assign(qx.begin(), qx.end());
  out.qy.assign(qy.begin(), qy.end());
  out.eta = eta;
  out.q.resize(qx.size());
  for (std::size_t i = 0; i < qx.size(); ++i) {
    out.q[i] = (1.0 - eta) * qx[i] + eta * qy[i];
    out.total += out.q[i];
  }
  return out;
}

std::vector<std::size_t> top_k(std::span<const double> q, std::size_t k) {
  if (k == 0 || k > q.size()) {
    throw ArgumentError("top_k: k=" + std::to_string(k) + " outside [1, " + std::to_string(q.size()) + "]");
  }
  std::vector<std::size_t> idx(q.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](std::size_t a, std::size_t b) { return q[a] > q[b] || (q[a] == q[b] && a < b); });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

double balance_eta(double a, double b, const EtaState& state) {
  double eta;
  if (a == 0.0 && b == 0.0) {
    eta = 0.5;
  } else if (a < 0.0 && b < 0.0) {
    eta = b / (a + b);
  } else if (a >= 0.0 && b >= 0.0) {
    eta = a / (a + b);
  } else if (a < 0.0) {
    eta = state.lower;  // input side violated: weight Q_x
  } else {
    eta = state.upper;  // output side violated: weight Q_y
  }
  return std::clamp(eta, state.lower, state.upper);
}

EtaState narrow_interval(double eta, const EtaState& state) {
  EtaState next = state;
  const double width = state.upper - state.lower;
  if (eta > 0.5 * (state.lower + state.upper)) {
    next.lower = state.lower + state.kappa * width;
  } else {
    next.upper = state.upper - state.kappa * width;
  }
  next.lower = std::clamp(next.lower, 0.0, 1.0);
  next.upper = std::clamp(next.upper, next.lower, 1.0);
  next.eta = std::clamp(eta, next.lower, next.upper);
  return next;
}

}  // namespace discover
