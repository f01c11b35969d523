#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <vector>

#include "fxlab/errors.hpp"
#include "fxlab/matrix.hpp"
#include "fxlab/models/spec.hpp"

#include <json.hpp>

namespace fxlab {

// Binary classifier. Labels are {0, 1}; a prediction is 1 iff the decision
// score strictly exceeds the family's threshold, so exact ties resolve to 0.
class Model {
 public:
  virtual ~Model() = default;

  void fit(const Matrix& X, const std::vector<int>& y) {
    if (X.rows() != y.size()) throw ValidationError("fit: row/label count mismatch");
    if (X.rows() < 2) throw ValidationError("fit: need at least 2 rows");
    for (double v : X.data()) {
      if (!std::isfinite(v)) throw ValidationError("fit: non-finite feature value");
    }
    for (int label : y) {
      if (label != 0 && label != 1) throw ValidationError("fit: labels must be 0 or 1");
    }
    n_features_ = X.cols();
    n_rows_ = X.rows();
    do_fit(X, y);
    fitted_ = true;
  }

  std::vector<int> predict(const Matrix& X) const {
    const std::vector<double> scores = decision_scores(X);
    std::vector<int> labels(scores.size());
    const double thr = threshold();
    for (std::size_t i = 0; i < scores.size(); ++i) labels[i] = scores[i] > thr ? 1 : 0;
    return labels;
  }

  virtual std::vector<double> decision_scores(const Matrix& X) const = 0;
  virtual double threshold() const = 0;
  virtual ModelFamily family() const = 0;
  virtual nlohmann::json to_json() const = 0;

  std::size_t feature_count() const { return n_features_; }
  std::size_t training_rows() const { return n_rows_; }
  std::uint64_t seed() const { return seed_; }

 protected:
  virtual void do_fit(const Matrix& X, const std::vector<int>& y) = 0;

  void check_input(const Matrix& X) const {
    if (!fitted_) throw ValidationError("predict before fit");
    if (X.cols() != n_features_) {
      throw ValidationError("predict: expected " + std::to_string(n_features_) +
                            " features, got " + std::to_string(X.cols()));
    }
  }

  static void require_both_classes(const std::vector<int>& y, const char* family) {
    bool has0 = false, has1 = false;
    for (int label : y) (label ? has1 : has0) = true;
    if (!has0 || !has1) {
      throw DataError(std::string(family) + ": training labels contain a single class");
    }
  }

  void restore_shape(std::size_t features, std::size_t rows, std::uint64_t seed) {
    n_features_ = features;
    n_rows_ = rows;
    seed_ = seed;
    fitted_ = true;
  }

  std::size_t n_features_ = 0;
  std::size_t n_rows_ = 0;
  std::uint64_t seed_ = 0;
  bool fitted_ = false;
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace fxlab
