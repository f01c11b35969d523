#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "fxlab/models/model.hpp"
#include "fxlab/rng.hpp"

namespace fxlab {

// Classification CART core shared by TREE, RANDOM_FOREST and EXTRA_TREES.
// Splits minimize weighted Gini impurity; thresholds are midpoints between
// adjacent distinct values, or one uniform draw per candidate feature when
// `random_thresholds` is set. Ties prefer the lower feature index, then the
// lower threshold. An impure node splits even at zero gain (both children are
// strictly smaller, so recursion terminates); this is what lets an
// unlimited-depth tree shatter any conflict-free sample, XOR included.
// Nodes are laid out in DFS order (left child first).
struct CartConfig {
  std::int64_t max_depth = 0;  // 0 = unlimited
  std::int64_t min_leaf = 1;
  std::size_t mtry = 0;  // candidate features per split; 0 = all
  bool random_thresholds = false;
};

class CartTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0;
    int left = -1, right = -1;
    double p1 = 0;  // fraction of label-1 training rows in the node
  };

  void fit(const Matrix& X, const std::vector<int>& y, const CartConfig& config, Rng& rng) {
    config_ = config;
    nodes_.clear();
    std::vector<std::size_t> idx(X.rows());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    build(X, y, idx, 0, rng);
  }

  // Same, but on a bootstrap/bag subset given by row indices.
  void fit_subset(const Matrix& X, const std::vector<int>& y, std::vector<std::size_t> idx,
                  const CartConfig& config, Rng& rng) {
    config_ = config;
    nodes_.clear();
    build(X, y, idx, 0, rng);
  }

  double predict_p1(const double* row) const {
    int at = 0;
    while (nodes_[at].feature >= 0) {
      at = row[nodes_[at].feature] <= nodes_[at].threshold ? nodes_[at].left : nodes_[at].right;
    }
    return nodes_[at].p1;
  }

  int predict_label(const double* row) const { return predict_p1(row) > 0.5 ? 1 : 0; }

  const std::vector<Node>& nodes() const { return nodes_; }

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const Node& n : nodes_) {
      arr.push_back({{"f", n.feature}, {"t", n.threshold}, {"l", n.left}, {"r", n.right},
                     {"p", n.p1}});
    }
    return arr;
  }

  static CartTree from_json(const nlohmann::json& arr) {
    CartTree tree;
    for (const auto& jn : arr) {
      Node n;
      n.feature = jn.at("f").get<int>();
      n.threshold = jn.at("t").get<double>();
      n.left = jn.at("l").get<int>();
      n.right = jn.at("r").get<int>();
      n.p1 = jn.at("p").get<double>();
      tree.nodes_.push_back(n);
    }
    return tree;
  }

 private:
  struct Split {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0;
    double gain = 0;
  };

  static double gini(std::size_t ones, std::size_t total) {
    if (total == 0) return 0;
    const double p = static_cast<double>(ones) / total;
    return 2.0 * p * (1.0 - p);
  }

  int build(const Matrix& X, const std::vector<int>& y, std::vector<std::size_t>& idx, int depth,
            Rng& rng) {
    const std::size_t n = idx.size();
    std::size_t ones = 0;
    for (std::size_t i : idx) ones += y[i];

    const int node_id = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    nodes_[node_id].p1 = static_cast<double>(ones) / n;

    const bool pure = ones == 0 || ones == n;
    const bool depth_stop = config_.max_depth > 0 && depth >= config_.max_depth;
    const bool size_stop = n < 2 * static_cast<std::size_t>(config_.min_leaf) || n < 2;
    if (pure || depth_stop || size_stop) return node_id;

    const Split split = find_split(X, y, idx, ones, rng);
    if (!split.found) return node_id;

    std::vector<std::size_t> left, right;
    for (std::size_t i : idx) {
      (X(i, split.feature) <= split.threshold ? left : right).push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();

    nodes_[node_id].feature = static_cast<int>(split.feature);
    nodes_[node_id].threshold = split.threshold;
    const int l = build(X, y, left, depth + 1, rng);
    const int r = build(X, y, right, depth + 1, rng);
    nodes_[node_id].left = l;
    nodes_[node_id].right = r;
    return node_id;
  }

  Split find_split(const Matrix& X, const std::vector<int>& y,
                   const std::vector<std::size_t>& idx, std::size_t ones, Rng& rng) {
    const std::size_t n = idx.size();
    const std::size_t f_total = X.cols();
    std::vector<std::size_t> features;
    if (config_.mtry == 0 || config_.mtry >= f_total) {
      features.resize(f_total);
      for (std::size_t j = 0; j < f_total; ++j) features[j] = j;
    } else {
      features = rng.sample_without_replacement(f_total, config_.mtry);
      std::sort(features.begin(), features.end());
    }

    const double parent = gini(ones, n);
    const std::size_t min_leaf = static_cast<std::size_t>(config_.min_leaf);
    Split best;

    std::vector<std::pair<double, int>> vals(n);
    for (std::size_t f : features) {
      for (std::size_t i = 0; i < n; ++i) vals[i] = {X(idx[i], f), y[idx[i]]};

      if (config_.random_thresholds) {
        double lo = vals[0].first, hi = vals[0].first;
        for (const auto& [v, lab] : vals) {
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        if (lo == hi) continue;
        const double thr = rng.uniform(lo, hi);
        std::size_t nl = 0, ol = 0;
        for (const auto& [v, lab] : vals) {
          if (v <= thr) {
            ++nl;
            ol += lab;
          }
        }
        const std::size_t nr = n - nl;
        if (nl < min_leaf || nr < min_leaf || nl == 0 || nr == 0) continue;
        const double gain = parent - (nl * gini(ol, nl) + nr * gini(ones - ol, nr)) / n;
        if (!best.found || gain > best.gain + 1e-15) {
          best = {true, f, thr, gain};
        }
        continue;
      }

      std::sort(vals.begin(), vals.end());
      std::size_t nl = 0, ol = 0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        ++nl;
        ol += vals[i].second;
        if (vals[i].first == vals[i + 1].first) continue;
        const std::size_t nr = n - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        const double gain = parent - (nl * gini(ol, nl) + nr * gini(ones - ol, nr)) / n;
        if (!best.found || gain > best.gain + 1e-15) {
          best = {true, f, (vals[i].first + vals[i + 1].first) / 2.0, gain};
        }
      }
    }
    return best;
  }

  CartConfig config_;
  std::vector<Node> nodes_;
};

// Single CART classifier.
class TreeModel : public Model {
 public:
  explicit TreeModel(const ModelSpec& spec) {
    seed_ = spec.seed;
    config_.max_depth = spec.get_int("max_depth", 0);
    config_.min_leaf = spec.get_int("min_leaf", 1);
    if (config_.max_depth < 0 || config_.min_leaf < 1) {
      throw ConfigError("TREE: bad hyperparameters");
    }
  }

  std::vector<double> decision_scores(const Matrix& X) const override {
    check_input(X);
    std::vector<double> out(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) out[i] = tree_.predict_p1(X.row_ptr(i));
    return out;
  }

  double threshold() const override { return 0.5; }
  ModelFamily family() const override { return ModelFamily::TREE; }

  nlohmann::json to_json() const override {
    nlohmann::json j;
    j["family"] = "TREE";
    j["max_depth"] = config_.max_depth;
    j["min_leaf"] = config_.min_leaf;
    j["seed"] = seed_;
    j["features"] = n_features_;
    j["rows"] = n_rows_;
    j["tree"] = tree_.to_json();
    return j;
  }

  static std::unique_ptr<TreeModel> from_json(const nlohmann::json& j) {
    ModelSpec spec;
    spec.family = ModelFamily::TREE;
    spec.hyper["max_depth"] = j.at("max_depth").get<std::int64_t>();
    spec.hyper["min_leaf"] = j.at("min_leaf").get<std::int64_t>();
    spec.seed = j.value("seed", std::uint64_t{0});
    auto model = std::make_unique<TreeModel>(spec);
    model->tree_ = CartTree::from_json(j.at("tree"));
    model->restore_shape(j.at("features").get<std::size_t>(), j.at("rows").get<std::size_t>(),
                         spec.seed);
    return model;
  }

 protected:
  void do_fit(const Matrix& X, const std::vector<int>& y) override {
    Rng rng(derive_seed(seed_, 0));
    tree_.fit(X, y, config_, rng);
  }

 private:
  CartConfig config_;
  CartTree tree_;
};

}  // namespace fxlab
