#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "discover/projection.hpp"
#include "discover/tabular.hpp"

namespace discover {

// Per-row additive contributions to Q under fixed transport plans.
struct ImpactScores {
  std::vector<double> qx;
  std::vector<double> qy;
  std::vector<double> q;
  double eta = 0.5;
  double total = 0.0;
};

// Balance weight with its admissible interval [lower, upper] and narrowing
// rate kappa.
struct EtaState {
  double eta = 0.5;
  double lower = 0.0;
  double upper = 1.0;
  double kappa = 0.1;
};

// qx_i = 1/(N n) sum_k (theta_k.x_i - theta_k.x'_{plan_k(i)})^2
std::vector<double> row_scores_input(const Matrix& x, const Matrix& xp, const ProjectionSet& dirs,
                                     const PlanTable& plans);
std::vector<double> row_scores_input(const Projected& current, const Projected& factual, const PlanTable& plans);

// qy_i = 1/n (y_i - y*_{plan(i)})^2
std::vector<double> row_scores_output(std::span<const double> y, std::span<const double> ystar,
                                      std::span<const std::size_t> plan);

ImpactScores combine(std::span<const double> qx, std::span<const double> qy, double eta);

// Indices of the k largest scores, ties to the smaller index, returned in
// ascending index order.
std::vector<std::size_t> top_k(std::span<const double> q, std::size_t k);

// a = U_x - UCL_SW, b = U_y - UCL_W. Same-sign gaps use the ratio rule;
// mixed signs pin eta to the interval end that favours the violated side.
// The result is clamped into [state.lower, state.upper].
double balance_eta(double a, double b, const EtaState& state);

// Shrinks [l, r] by kappa toward the side eta falls on. The returned state
// carries eta clamped into the narrowed interval.
EtaState narrow_interval(double eta, const EtaState& state);

}  // namespace discover
