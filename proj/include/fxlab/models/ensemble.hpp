#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "fxlab/models/model.hpp"
#include "fxlab/models/tree.hpp"
#include "fxlab/rng.hpp"

namespace fxlab {

// Defined in models.hpp; declared here so the bagging wrapper can construct
// arbitrary inner models.
std::unique_ptr<Model> make_model(const ModelSpec& spec);
std::unique_ptr<Model> model_from_json(const nlohmann::json& j);

inline bool needs_both_classes(const ModelSpec& spec) {
  if (spec.family == ModelFamily::LOGISTIC || spec.family == ModelFamily::SVM) return true;
  if (spec.family == ModelFamily::BAGGING && spec.inner) return needs_both_classes(*spec.inner);
  return false;
}

// Bootstrap-aggregated wrapper around any inner model spec. Member seeds
// derive from the wrapper seed by counter, so fits are reproducible and
// order-independent. Majority vote; exact ties resolve to 0.
class BaggingModel : public Model {
 public:
  explicit BaggingModel(const ModelSpec& spec)
      : spec_(spec),
        n_estimators_(spec.get_int("n_estimators", 10)),
        bootstrap_(spec.get_bool("bootstrap", true)) {
    seed_ = spec.seed;
    if (!spec_.inner) throw ConfigError("BAGGING spec requires an inner model");
    if (n_estimators_ < 1) throw ConfigError("BAGGING: n_estimators must be >= 1");
  }

  std::vector<double> decision_scores(const Matrix& X) const override {
    check_input(X);
    std::vector<double> votes(X.rows(), 0.0);
    for (const auto& member : members_) {
      const std::vector<int> labels = member->predict(X);
      for (std::size_t i = 0; i < labels.size(); ++i) votes[i] += labels[i];
    }
    for (double& v : votes) v /= members_.size();
    return votes;
  }

  double threshold() const override { return 0.5; }
  ModelFamily family() const override { return ModelFamily::BAGGING; }

  const std::vector<std::unique_ptr<Model>>& members() const { return members_; }

  nlohmann::json to_json() const override {
    nlohmann::json j;
    j["family"] = "BAGGING";
    j["n_estimators"] = n_estimators_;
    j["bootstrap"] = bootstrap_;
    j["seed"] = seed_;
    j["features"] = n_features_;
    j["rows"] = n_rows_;
    j["inner_spec"] = spec_.inner->to_json();
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& m : members_) arr.push_back(m->to_json());
    j["members"] = arr;
    return j;
  }

  static std::unique_ptr<BaggingModel> from_json(const nlohmann::json& j) {
    ModelSpec spec;
    spec.family = ModelFamily::BAGGING;
    spec.hyper["n_estimators"] = j.at("n_estimators").get<std::int64_t>();
    spec.hyper["bootstrap"] = j.at("bootstrap").get<bool>();
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.inner = std::make_shared<ModelSpec>(ModelSpec::from_json(j.at("inner_spec")));
    auto model = std::make_unique<BaggingModel>(spec);
    for (const auto& jm : j.at("members")) model->members_.push_back(model_from_json(jm));
    model->restore_shape(j.at("features").get<std::size_t>(), j.at("rows").get<std::size_t>(),
                         spec.seed);
    return model;
  }

 protected:
  void do_fit(const Matrix& X, const std::vector<int>& y) override {
    members_.clear();
    const std::size_t n = X.rows();
    for (std::int64_t e = 0; e < n_estimators_; ++e) {
      ModelSpec inner = *spec_.inner;
      inner.seed = derive_seed(seed_, static_cast<std::uint64_t>(2 * e));
      auto member = make_model(inner);

      if (!bootstrap_) {
        member->fit(X, y);
      } else {
        Rng rng(derive_seed(seed_, static_cast<std::uint64_t>(2 * e + 1)));
        // Single-class resamples would break margin/likelihood inners;
        // redraw deterministically.
        for (int attempt = 0;; ++attempt) {
          std::vector<std::size_t> idx(n);
          for (std::size_t i = 0; i < n; ++i) {
            idx[i] = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
          }
          std::vector<int> yb(n);
          for (std::size_t i = 0; i < n; ++i) yb[i] = y[idx[i]];
          bool has0 = false, has1 = false;
          for (int label : yb) (label ? has1 : has0) = true;
          if (needs_both_classes(*spec_.inner) && !(has0 && has1)) {
            if (attempt >= 100) {
              throw DataError("BAGGING: could not draw a two-class bootstrap sample");
            }
            continue;
          }
          member->fit(X.select_rows(idx), yb);
          break;
        }
      }
      members_.push_back(std::move(member));
    }
  }

 private:
  ModelSpec spec_;
  std::int64_t n_estimators_;
  bool bootstrap_;
  std::vector<std::unique_ptr<Model>> members_;
};

// Shared implementation for the two randomized CART forests. Random forest
// bootstraps rows and samples ceil(sqrt(F)) candidate features per split;
// extra trees keep all rows and draw one uniform threshold per candidate.
class ForestModel : public Model {
 public:
  ForestModel(const ModelSpec& spec, bool extra)
      : extra_(extra),
        n_trees_(spec.get_int("n_trees", 100)),
        max_depth_(spec.get_int("max_depth", 0)),
        min_leaf_(spec.get_int("min_leaf", 1)) {
    seed_ = spec.seed;
    if (n_trees_ < 1 || max_depth_ < 0 || min_leaf_ < 1) {
      throw ConfigError(std::string(extra ? "EXTRA_TREES" : "RANDOM_FOREST") +
                        ": bad hyperparameters");
    }
  }

  std::vector<double> decision_scores(const Matrix& X) const override {
    check_input(X);
    std::vector<double> votes(X.rows(), 0.0);
    for (const auto& tree : trees_) {
      for (std::size_t i = 0; i < X.rows(); ++i) votes[i] += tree.predict_label(X.row_ptr(i));
    }
    for (double& v : votes) v /= trees_.size();
    return votes;
  }

  double threshold() const override { return 0.5; }
  ModelFamily family() const override {
    return extra_ ? ModelFamily::EXTRA_TREES : ModelFamily::RANDOM_FOREST;
  }

  nlohmann::json to_json() const override {
    nlohmann::json j;
    j["family"] = extra_ ? "EXTRA_TREES" : "RANDOM_FOREST";
    j["n_trees"] = n_trees_;
    j["max_depth"] = max_depth_;
    j["min_leaf"] = min_leaf_;
    j["seed"] = seed_;
    j["features"] = n_features_;
    j["rows"] = n_rows_;
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& t : trees_) arr.push_back(t.to_json());
    j["trees"] = arr;
    return j;
  }

  static std::unique_ptr<ForestModel> from_json(const nlohmann::json& j) {
    ModelSpec spec;
    const bool extra = j.at("family").get<std::string>() == "EXTRA_TREES";
    spec.family = extra ? ModelFamily::EXTRA_TREES : ModelFamily::RANDOM_FOREST;
    spec.hyper["n_trees"] = j.at("n_trees").get<std::int64_t>();
    spec.hyper["max_depth"] = j.at("max_depth").get<std::int64_t>();
    spec.hyper["min_leaf"] = j.at("min_leaf").get<std::int64_t>();
    spec.seed = j.value("seed", std::uint64_t{0});
    auto model = std::make_unique<ForestModel>(spec, extra);
    for (const auto& jt : j.at("trees")) model->trees_.push_back(CartTree::from_json(jt));
    model->restore_shape(j.at("features").get<std::size_t>(), j.at("rows").get<std::size_t>(),
                         spec.seed);
    return model;
  }

 protected:
  void do_fit(const Matrix& X, const std::vector<int>& y) override {
    trees_.clear();
    const std::size_t n = X.rows();
    CartConfig config;
    config.max_depth = max_depth_;
    config.min_leaf = min_leaf_;
    config.mtry = static_cast<std::size_t>(
        std::ceil(std::sqrt(static_cast<double>(X.cols()))));
    config.random_thresholds = extra_;

    for (std::int64_t t = 0; t < n_trees_; ++t) {
      CartTree tree;
      Rng tree_rng(derive_seed(seed_, static_cast<std::uint64_t>(2 * t + 1)));
      if (extra_) {
        tree.fit(X, y, config, tree_rng);
      } else {
        Rng boot_rng(derive_seed(seed_, static_cast<std::uint64_t>(2 * t)));
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) {
          idx[i] =
              static_cast<std::size_t>(boot_rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
        }
        tree.fit_subset(X, y, std::move(idx), config, tree_rng);
      }
      trees_.push_back(std::move(tree));
    }
  }

 private:
  bool extra_;
  std::int64_t n_trees_;
  std::int64_t max_depth_;
  std::int64_t min_leaf_;
  std::vector<CartTree> trees_;
};

}  // namespace fxlab
