#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "fxlab/models/model.hpp"

namespace fxlab {

// Mean L2-regularized log loss and its gradient. The weight vector carries
// the bias in its final slot; the bias is not regularized.
inline std::pair<double, std::vector<double>> logistic_loss_and_gradient(
    const Matrix& X, const std::vector<int>& y, const std::vector<double>& w, double l2) {
  const std::size_t n = X.rows(), f = X.cols();
  if (w.size() != f + 1) throw ValidationError("logistic: weight size mismatch");
  double loss = 0;
  std::vector<double> grad(f + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = X.row_ptr(i);
    double z = w[f];
    for (std::size_t j = 0; j < f; ++j) z += w[j] * row[j];
    const double p = sigmoid(z);
    // log(1 + e^{-|z|}) form avoids overflow for large |z|.
    loss += z > 0 ? std::log1p(std::exp(-z)) + (1.0 - y[i]) * z
                  : std::log1p(std::exp(z)) - y[i] * z;
    const double d = p - y[i];
    for (std::size_t j = 0; j < f; ++j) grad[j] += d * row[j];
    grad[f] += d;
  }
  loss /= n;
  for (std::size_t j = 0; j <= f; ++j) grad[j] /= n;
  double reg = 0;
  for (std::size_t j = 0; j < f; ++j) {
    reg += w[j] * w[j];
    grad[j] += l2 * w[j];
  }
  loss += 0.5 * l2 * reg;
  return {loss, std::move(grad)};
}

// Batch gradient descent on the objective above; stops on small gradient
// norm or after `iters` steps.
class LogisticModel : public Model {
 public:
  explicit LogisticModel(const ModelSpec& spec)
      : l2_(spec.get_real("l2", 1e-4)),
        lr_(spec.get_real("lr", 0.1)),
        iters_(spec.get_int("iters", 1000)),
        tol_(spec.get_real("tol", 1e-8)) {
    seed_ = spec.seed;
    if (l2_ < 0 || lr_ <= 0 || iters_ < 1) throw ConfigError("LOGISTIC: bad hyperparameters");
  }

  std::vector<double> decision_scores(const Matrix& X) const override {
    check_input(X);
    const std::size_t f = n_features_;
    std::vector<double> out(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) {
      const double* row = X.row_ptr(i);
      double z = weights_[f];
      for (std::size_t j = 0; j < f; ++j) z += weights_[j] * row[j];
      out[i] = sigmoid(z);
    }
    return out;
  }

  double threshold() const override { return 0.5; }
  ModelFamily family() const override { return ModelFamily::LOGISTIC; }

  const std::vector<double>& weights() const { return weights_; }

  nlohmann::json to_json() const override {
    nlohmann::json j;
    j["family"] = "LOGISTIC";
    j["l2"] = l2_;
    j["lr"] = lr_;
    j["iters"] = iters_;
    j["tol"] = tol_;
    j["seed"] = seed_;
    j["features"] = n_features_;
    j["rows"] = n_rows_;
    j["weights"] = weights_;
    return j;
  }

  static std::unique_ptr<LogisticModel> from_json(const nlohmann::json& j) {
    ModelSpec spec;
    spec.family = ModelFamily::LOGISTIC;
    spec.hyper["l2"] = j.at("l2").get<double>();
    spec.hyper["lr"] = j.at("lr").get<double>();
    spec.hyper["iters"] = j.at("iters").get<std::int64_t>();
    spec.hyper["tol"] = j.at("tol").get<double>();
    spec.seed = j.value("seed", std::uint64_t{0});
    auto model = std::make_unique<LogisticModel>(spec);
    model->weights_ = j.at("weights").get<std::vector<double>>();
    model->restore_shape(j.at("features").get<std::size_t>(), j.at("rows").get<std::size_t>(),
                         spec.seed);
    return model;
  }

 protected:
  void do_fit(const Matrix& X, const std::vector<int>& y) override {
    require_both_classes(y, "LOGISTIC");
    weights_.assign(X.cols() + 1, 0.0);
    for (std::int64_t it = 0; it < iters_; ++it) {
      auto [loss, grad] = logistic_loss_and_gradient(X, y, weights_, l2_);
      (void)loss;
      double norm = 0;
      for (double g : grad) norm += g * g;
      if (std::sqrt(norm) < tol_) break;
      for (std::size_t j = 0; j < weights_.size(); ++j) weights_[j] -= lr_ * grad[j];
    }
  }

 private:
  double l2_;
  double lr_;
  std::int64_t iters_;
  double tol_;
  std::vector<double> weights_;  // bias last
};

}  // namespace fxlab
