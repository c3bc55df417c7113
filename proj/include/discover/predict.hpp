#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <condition_variable>
#include <span>
#include <string>
#include <vector>

#include "discover/tabular.hpp"
#include "json.hpp"

namespace discover {

struct PredictorCapabilities {
  bool concurrent_safe = true;
  bool batch_preferred = true;
};

// Black-box model b: R^d -> R over encoded rows. The solver only ever calls
// predict(); no gradients or parameters are read.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::vector<double> predict(const Matrix& rows) const = 0;
  virtual PredictorCapabilities capabilities() const { return {}; }
  // Serializable description (builtin models only; external ones describe
  // their command).
  virtual nlohmann::json to_json() const = 0;
};

using PredictorPtr = std::shared_ptr<const Predictor>;

// predict() plus the output contract: one finite value per row.
std::vector<double> checked_predict(const Predictor& model, const Matrix& rows);

class LinearModel final : public Predictor {
 public:
  LinearModel(std::vector<double> weights, double intercept);
  std::vector<double> predict(const Matrix& rows) const override;
  nlohmann::json to_json() const override;
  const std::vector<double>& weights() const { return weights_; }
  double intercept() const { return intercept_; }

 private:
  std::vector<double> weights_;
  double intercept_;
};

class LogisticModel final : public Predictor {
 public:
  LogisticModel(std::vector<double> weights, double intercept);
  std::vector<double> predict(const Matrix& rows) const override;
  nlohmann::json to_json() const override;
  const std::vector<double>& weights() const { return weights_; }
  double intercept() const { return intercept_; }

 private:
  std::vector<double> weights_;
  double intercept_;
};

// Additive ensemble of depth-1 trees. Piecewise constant, so it has no useful
// gradient anywhere.
class StumpEnsemble final : public Predictor {
 public:
  struct Stump {
    std::size_t feature = 0;
    double threshold = 0.0;
    double left = 0.0;   // added when x[feature] <= threshold
    double right = 0.0;  // added otherwise
  };

  StumpEnsemble(double base, std::vector<Stump> stumps, std::size_t dim);
  std::vector<double> predict(const Matrix& rows) const override;
  nlohmann::json to_json() const override;
  const std::vector<Stump>& stumps() const { return stumps_; }
  double base() const { return base_; }

 private:
  double base_;
  std::vector<Stump> stumps_;
  std::size_t dim_;
};

enum class BuiltinKind { kLinear, kLogistic, kStumpEnsemble };

BuiltinKind parse_builtin_kind(const std::string& name);
std::string to_string(BuiltinKind kind);

struct FitOptions {
  std::size_t stumps = 200;
  double shrinkage = 0.1;
  double subsample = 0.8;
  double ridge = 1e-6;  // logistic only; keeps separable data well posed
  std::size_t max_iterations = 100;
  double tolerance = 1e-8;
};

std::shared_ptr<Predictor> fit_builtin(BuiltinKind kind, const Matrix& x, std::span<const double> y,
                                       std::uint64_t seed, const FitOptions& options = {});

struct ExternalOptions {
  std::chrono::milliseconds timeout{30000};
  std::size_t pool_size = 1;
};

// Long-lived child process(es) speaking newline-delimited JSON on stdio:
//   -> {"id": <int>, "rows": [[...], ...]}
//   <- {"id": <int>, "outputs": [...]}
// A handshake {"id":0,"rows":[]} is sent when each process starts. One request
// is in flight per process; calls queue for a free process.
class ExternalPredictor final : public Predictor {
 public:
  explicit ExternalPredictor(std::vector<std::string> command, ExternalOptions options = {});
  ~ExternalPredictor() override;
  ExternalPredictor(const ExternalPredictor&) = delete;
  ExternalPredictor& operator=(const ExternalPredictor&) = delete;

  std::vector<double> predict(const Matrix& rows) const override;
  PredictorCapabilities capabilities() const override { return {options_.pool_size > 1, true}; }
  nlohmann::json to_json() const override;

 private:
  struct Process;
  std::unique_ptr<Process> spawn() const;
  std::vector<double> exchange(Process& proc, const Matrix& rows) const;

  std::vector<std::string> command_;
  ExternalOptions options_;
  mutable std::mutex mutex_;
  mutable std::condition_variable available_;
  mutable std::vector<std::unique_ptr<Process>> idle_;
};

// Builds a predictor from its JSON description:
//   {"kind": "linear"|"logistic", "weights": [...], "intercept": x}
//   {"kind": "stump_ensemble", "base": x, "dim": d, "stumps": [{feature, threshold, left, right}, ...]}
//   {"external": ["cmd", "arg", ...], "timeout_s": 30, "pool": 1}
std::shared_ptr<Predictor> predictor_from_json(const nlohmann::json& spec);

}  // namespace discover
