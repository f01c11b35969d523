#pragma once

#include <algorithm>
#include <vector>

#include "fxlab/models/model.hpp"

namespace fxlab {

// Euclidean k-nearest-neighbors vote. Distance ties prefer the lower
// training-row index; vote ties resolve to label 0 via the 0.5 threshold.
class KnnModel : public Model {
 public:
  explicit KnnModel(const ModelSpec& spec) : k_(spec.get_int("k", 5)) {
    seed_ = spec.seed;
    if (k_ < 1) throw ConfigError("KNN: k must be >= 1");
  }

  std::vector<double> decision_scores(const Matrix& X) const override {
    check_input(X);
    const std::size_t n = train_.rows();
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(k_), n);
    std::vector<double> out(X.rows());
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t q = 0; q < X.rows(); ++q) {
      const double* row = X.row_ptr(q);
      for (std::size_t i = 0; i < n; ++i) {
        const double* t = train_.row_ptr(i);
        double d2 = 0;
        for (std::size_t j = 0; j < n_features_; ++j) {
          const double d = row[j] - t[j];
          d2 += d * d;
        }
        dist[i] = {d2, i};
      }
      std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
      std::size_t ones = 0;
      for (std::size_t i = 0; i < k; ++i) ones += labels_[dist[i].second];
      out[q] = static_cast<double>(ones) / k;
    }
    return out;
  }

  double threshold() const override { return 0.5; }
  ModelFamily family() const override { return ModelFamily::KNN; }

  nlohmann::json to_json() const override {
    nlohmann::json j;
    j["family"] = "KNN";
    j["k"] = k_;
    j["seed"] = seed_;
    j["features"] = n_features_;
    j["rows"] = n_rows_;
    j["train"] = train_.data();
    j["labels"] = labels_;
    return j;
  }

  static std::unique_ptr<KnnModel> from_json(const nlohmann::json& j) {
    ModelSpec spec;
    spec.family = ModelFamily::KNN;
    spec.hyper["k"] = j.at("k").get<std::int64_t>();
    spec.seed = j.value("seed", std::uint64_t{0});
    auto model = std::make_unique<KnnModel>(spec);
    const std::size_t features = j.at("features").get<std::size_t>();
    const std::size_t rows = j.at("rows").get<std::size_t>();
    const auto flat = j.at("train").get<std::vector<double>>();
    model->train_ = Matrix(rows, features);
    model->train_.data() = flat;
    model->labels_ = j.at("labels").get<std::vector<int>>();
    model->restore_shape(features, rows, spec.seed);
    return model;
  }

 protected:
  void do_fit(const Matrix& X, const std::vector<int>& y) override {
    train_ = X;
    labels_ = y;
  }

 private:
  std::int64_t k_;
  Matrix train_;
  std::vector<int> labels_;
};

}  // namespace fxlab
