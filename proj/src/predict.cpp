#include "discover/predict.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "discover/error.hpp"
#include "discover/rng.hpp"

namespace discover {

std::vector<double> checked_predict(const Predictor& model, const Matrix& rows) {
  if (rows.rows == 0) return {};
  auto out = model.predict(rows);
  if (out.size() != rows.rows) {
    throw PredictorError("predictor returned " + std::to_string(out.size()) + " outputs for " +
                         std::to_string(rows.rows) + " rows");
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!std::isfinite(out[i])) throw PredictorError("predictor returned a non-finite output for row " + std::to_string(i));
  }
  return out;
}

namespace {

void check_width(const Matrix& rows, std::size_t dim) {
  if (rows.rows > 0 && rows.cols != dim) {
    throw PredictorError("predictor expects " + std::to_string(dim) + " features, got " + std::to_string(rows.cols));
  }
}

double affine(std::span<const double> row, const std::vector<double>& w, double b) {
  double s = b;
  for (std::size_t p = 0; p < w.size(); ++p) s += w[p] * row[p];
  return s;
}

double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

Eigen::MatrixXd design(const Matrix& x) {
  Eigen::MatrixXd a(static_cast<Eigen::Index>(x.rows), static_cast<Eigen::Index>(x.cols + 1));
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t p = 0; p < x.cols; ++p) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) = x(i, p);
    a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(x.cols)) = 1.0;
  }
  return a;
}

void require_full_rank(const Eigen::MatrixXd& a) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < a.cols()) {
    throw FitError("singular design: rank " + std::to_string(qr.rank()) + " < " + std::to_string(a.cols()) +
                   " (including intercept)");
  }
}

std::shared_ptr<Predictor> fit_linear(const Matrix& x, std::span<const double> y) {
  const Eigen::MatrixXd a = design(x);
  require_full_rank(a);
  const Eigen::Map<const Eigen::VectorXd> target(y.data(), static_cast<Eigen::Index>(y.size()));
  const Eigen::VectorXd beta = a.colPivHouseholderQr().solve(target);
  std::vector<double> w(x.cols);
  for (std::size_t p = 0; p < x.cols; ++p) w[p] = beta(static_cast<Eigen::Index>(p));
  return std::make_shared<LinearModel>(std::move(w), beta(static_cast<Eigen::Index>(x.cols)));
}

std::shared_ptr<Predictor> fit_logistic(const Matrix& x, std::span<const double> y, const FitOptions& opt) {
  for (double v : y) {
    if (v != 0.0 && v != 1.0) throw ArgumentError("logistic fit requires labels in {0, 1}");
  }
  const Eigen::MatrixXd a = design(x);
  require_full_rank(a);
  const Eigen::Index n = a.rows();
  const Eigen::Index m = a.cols();
  const Eigen::Map<const Eigen::VectorXd> target(y.data(), n);
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(m, opt.ridge);
  penalty(m - 1) = 0.0;  // intercept is not penalized

  auto objective = [&](const Eigen::VectorXd& beta) {
    const Eigen::VectorXd t = a * beta;
    double nll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      // log(1 + e^t) - y t, computed stably
      const double ti = t(i);
      nll += (ti > 0 ? ti + std::log1p(std::exp(-ti)) : std::log1p(std::exp(ti))) - target(i) * ti;
    }
    return nll + 0.5 * beta.cwiseProduct(penalty).dot(beta);
  };

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(m);
  double current = objective(beta);
  for (std::size_t it = 0; it < opt.max_iterations; ++it) {
    const Eigen::VectorXd t = a * beta;
    Eigen::VectorXd prob(n), weight(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      prob(i) = sigmoid(t(i));
      weight(i) = std::max(prob(i) * (1.0 - prob(i)), 1e-12);
    }
    const Eigen::VectorXd grad = a.transpose() * (prob - target) + penalty.cwiseProduct(beta);
    Eigen::MatrixXd hess = a.transpose() * weight.asDiagonal() * a;
    hess.diagonal() += penalty;
    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    double scale = 1.0;
    Eigen::VectorXd next = beta - step;
    double value = objective(next);
    while (value > current && scale > 1e-10) {
      scale *= 0.5;
      next = beta - scale * step;
      value = objective(next);
    }
    const double change = (next - beta).cwiseAbs().maxCoeff();
    beta = next;
    current = value;
    if (change < opt.tolerance) break;
  }
  std::vector<double> w(x.cols);
  for (std::size_t p = 0; p < x.cols; ++p) w[p] = beta(static_cast<Eigen::Index>(p));
  return std::make_shared<LogisticModel>(std::move(w), beta(m - 1));
}

std::shared_ptr<Predictor> fit_stumps(const Matrix& x, std::span<const double> y, std::uint64_t seed,
                                      const FitOptions& opt) {
  const std::size_t n = x.rows;
  const std::size_t d = x.cols;
  const double base = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  std::vector<double> fitted(n, base);

  // Rows ordered by each feature once; each round walks these orders.
  std::vector<std::vector<std::size_t>> order(d, std::vector<std::size_t>(n));
  for (std::size_t p = 0; p < d; ++p) {
    std::iota(order[p].begin(), order[p].end(), 0);
    std::stable_sort(order[p].begin(), order[p].end(), [&](std::size_t a, std::size_t b) { return x(a, p) < x(b, p); });
  }

  Rng rng(splitmix64(seed));
  const auto sample_size = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(opt.subsample * static_cast<double>(n))));
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  std::vector<char> in_sample(n, 1);
  std::vector<double> residual(n);

  std::vector<StumpEnsemble::Stump> stumps;
  for (std::size_t round = 0; round < opt.stumps; ++round) {
    if (sample_size < n) {
      std::shuffle(all.begin(), all.end(), rng);
      std::fill(in_sample.begin(), in_sample.end(), 0);
      for (std::size_t s = 0; s < sample_size; ++s) in_sample[all[s]] = 1;
    }
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      residual[i] = y[i] - fitted[i];
      if (in_sample[i]) {
        total += residual[i];
        ++count;
      }
    }
    StumpEnsemble::Stump best{0, 0.0, 0.0, 0.0};
    double best_gain = -1.0;
    for (std::size_t p = 0; p < d; ++p) {
      double left_sum = 0.0;
      std::size_t left_n = 0;
      double prev = 0.0;
      bool have_prev = false;
      for (std::size_t r = 0; r < n; ++r) {
        const std::size_t i = order[p][r];
        if (!in_sample[i]) continue;
        const double v = x(i, p);
        if (have_prev && v > prev && left_n > 0 && left_n < count) {
          const double right_sum = total - left_sum;
          const auto right_n = static_cast<double>(count - left_n);
          const double gain = left_sum * left_sum / static_cast<double>(left_n) + right_sum * right_sum / right_n;
          if (gain > best_gain) {
            best_gain = gain;
            best = {p, 0.5 * (prev + v), left_sum / static_cast<double>(left_n), right_sum / right_n};
          }
        }
        left_sum += residual[i];
        ++left_n;
        prev = v;
        have_prev = true;
      }
    }
    if (best_gain < 0.0) {
      const double mean = count ? total / static_cast<double>(count) : 0.0;
      best = {0, std::numeric_limits<double>::max(), mean, mean};
    }
    best.left *= opt.shrinkage;
    best.right *= opt.shrinkage;
    for (std::size_t i = 0; i < n; ++i) fitted[i] += x(i, best.feature) <= best.threshold ? best.left : best.right;
    stumps.push_back(best);
  }
  return std::make_shared<StumpEnsemble>(base, std::move(stumps), d);
}

std::vector<double> json_reals(const nlohmann::json& arr, const char* what) {
  if (!arr.is_array()) throw ConfigError(std::string("predictor spec: '") + what + "' must be an array");
  std::vector<double> out;
  for (const auto& v : arr) {
    if (!v.is_number()) throw ConfigError(std::string("predictor spec: '") + what + "' must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

LinearModel::LinearModel(std::vector<double> weights, double intercept)
    : weights_(std::move(weights)), intercept_(intercept) {}

std::vector<double> LinearModel::predict(const Matrix& rows) const {
  check_width(rows, weights_.size());
  std::vector<double> out(rows.rows);
  for (std::size_t i = 0; i < rows.rows; ++i) out[i] = affine(rows.row(i), weights_, intercept_);
  return out;
}

nlohmann::json LinearModel::to_json() const {
  return {{"kind", "linear"}, {"weights", weights_}, {"intercept", intercept_}};
}

LogisticModel::LogisticModel(std::vector<double> weights, double intercept)
    : weights_(std::move(weights)), intercept_(intercept) {}

std::vector<double> LogisticModel::predict(const Matrix& rows) const {
  check_width(rows, weights_.size());
  std::vector<double> out(rows.rows);
  for (std::size_t i = 0; i < rows.rows; ++i) out[i] = sigmoid(affine(rows.row(i), weights_, intercept_));
  return out;
}

nlohmann::json LogisticModel::to_json() const {
  return {{"kind", "logistic"}, {"weights", weights_}, {"intercept", intercept_}};
}

StumpEnsemble::StumpEnsemble(double base, std::vector<Stump> stumps, std::size_t dim)
    : base_(base), stumps_(std::move(stumps)), dim_(dim) {
  for (const auto& s : stumps_) {
    if (s.feature >= dim_) throw ArgumentError("stump feature index out of range");
  }
}

std::vector<double> StumpEnsemble::predict(const Matrix& rows) const {
  check_width(rows, dim_);
  std::vector<double> out(rows.rows, base_);
  for (std::size_t i = 0; i < rows.rows; ++i) {
    const auto row = rows.row(i);
    double s = base_;
    for (const auto& st : stumps_) s += row[st.feature] <= st.threshold ? st.left : st.right;
    out[i] = s;
  }
  return out;
}

nlohmann::json StumpEnsemble::to_json() const {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& s : stumps_) {
    list.push_back({{"feature", s.feature}, {"threshold", s.threshold}, {"left", s.left}, {"right", s.right}});
  }
  return {{"kind", "stump_ensemble"}, {"base", base_}, {"dim", dim_}, {"stumps", list}};
}

BuiltinKind parse_builtin_kind(const std::string& name) {
  if (name == "linear") return BuiltinKind::kLinear;
  if (name == "logistic") return BuiltinKind::kLogistic;
  if (name == "stump_ensemble") return BuiltinKind::kStumpEnsemble;
  throw ConfigError("unknown builtin predictor kind '" + name + "'");
}

std::string to_string(BuiltinKind kind) {
  switch (kind) {
    case BuiltinKind::kLinear:
      return "linear";
    case BuiltinKind::kLogistic:
      return "logistic";
    case BuiltinKind::kStumpEnsemble:
      return "stump_ensemble";
  }
  return "unknown";
}

std::shared_ptr<Predictor> fit_builtin(BuiltinKind kind, const Matrix& x, std::span<const double> y,
                                       std::uint64_t seed, const FitOptions& options) {
  if (x.rows != y.size()) throw ArgumentError("fit: row count and label count differ");
  if (x.rows < 2) throw FitError("fit: need at least two rows");
  switch (kind) {
    case BuiltinKind::kLinear:
      return fit_linear(x, y);
    case BuiltinKind::kLogistic:
      return fit_logistic(x, y, options);
    case BuiltinKind::kStumpEnsemble:
      return fit_stumps(x, y, seed, options);
  }
  throw ArgumentError("fit: unknown model kind");
}

std::shared_ptr<Predictor> predictor_from_json(const nlohmann::json& spec) {
  if (!spec.is_object()) throw ConfigError("predictor spec must be a JSON object");
  if (spec.contains("external")) {
    const auto& cmd = spec.at("external");
    if (!cmd.is_array() || cmd.empty()) throw ConfigError("predictor spec: 'external' must be a non-empty array");
    std::vector<std::string> argv;
    for (const auto& a : cmd) {
      if (!a.is_string()) throw ConfigError("predictor spec: 'external' entries must be strings");
      argv.push_back(a.get<std::string>());
    }
    ExternalOptions opt;
    if (spec.contains("timeout_s")) {
      opt.timeout = std::chrono::milliseconds(static_cast<long long>(spec.at("timeout_s").get<double>() * 1000.0));
    }
    if (spec.contains("pool")) opt.pool_size = std::max<std::size_t>(1, spec.at("pool").get<std::size_t>());
    return std::make_shared<ExternalPredictor>(std::move(argv), opt);
  }
  const std::string kind = spec.value("kind", std::string{});
  if (kind == "linear" || kind == "logistic") {
    auto w = json_reals(spec.at("weights"), "weights");
    const double b = spec.value("intercept", 0.0);
    if (kind == "linear") return std::make_shared<LinearModel>(std::move(w), b);
    return std::make_shared<LogisticModel>(std::move(w), b);
  }
  if (kind == "stump_ensemble") {
    std::vector<StumpEnsemble::Stump> stumps;
    for (const auto& s : spec.at("stumps")) {
      stumps.push_back({s.at("feature").get<std::size_t>(), s.at("threshold").get<double>(),
                        s.at("left").get<double>(), s.at("right").get<double>()});
    }
    return std::make_shared<StumpEnsemble>(spec.value("base", 0.0), std::move(stumps), spec.at("dim").get<std::size_t>());
  }
  throw ConfigError("predictor spec: unknown kind '" + kind + "'");
}

}  // namespace discover
