#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "fxlab/models/model.hpp"

namespace fxlab {

namespace detail {

// Per-feature split-candidate thresholds, computed once per training run so
// exact and histogram modes differ only in this list. Exact mode uses every
// midpoint between adjacent distinct values; histogram mode uses
// equal-frequency bin boundaries, which degenerate to the exact list when
// the bin budget covers all distinct values.
inline std::vector<std::vector<double>> split_candidates(const Matrix& X, std::int64_t bins) {
  std::vector<std::vector<double>> out(X.cols());
  for (std::size_t f = 0; f < X.cols(); ++f) {
    std::vector<double> vals = X.column(f);
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    std::vector<double>& cands = out[f];
    if (vals.size() < 2) continue;
    if (bins <= 0 || static_cast<std::int64_t>(vals.size()) <= bins) {
      for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
        cands.push_back((vals[i] + vals[i + 1]) / 2.0);
      }
    } else {
      // Equal-frequency boundaries over the distinct values.
      const std::size_t d = vals.size();
      for (std::int64_t b = 1; b < bins; ++b) {
        const std::size_t pos = static_cast<std::size_t>(b * d / bins);
        if (pos == 0 || pos >= d) continue;
        const double thr = (vals[pos - 1] + vals[pos]) / 2.0;
        if (cands.empty() || thr > cands.back()) cands.push_back(thr);
      }
    }
  }
  return out;
}

}  // namespace detail

// Regression tree over (residual, hessian) pairs, used by all boosting
// variants. Splits scan the precomputed candidate thresholds; leaves carry
// Newton values sum(r)/(sum(h)+lambda), clamped for stability.
class BoostRegTree {
 public:
  struct Node {
    int feature = -1;
    double threshold = 0;
    int left = -1, right = -1;
    double value = 0;
  };

  struct Params {
    std::int64_t max_depth = 3;
    std::int64_t min_leaf = 1;
    bool newton_gain = false;  // second-order gain with L2 leaf regularization
    double lambda = 0;
  };

  void fit(const Matrix& X, const std::vector<double>& r, const std::vector<double>& h,
           const std::vector<std::vector<double>>& candidates, const Params& params) {
    params_ = params;
    nodes_.clear();
    std::vector<std::size_t> idx(X.rows());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    build(X, r, h, candidates, idx, 0);
  }

  double predict(const double* row) const {
    int at = 0;
    while (nodes_[at].feature >= 0) {
      at = row[nodes_[at].feature] <= nodes_[at].threshold ? nodes_[at].left : nodes_[at].right;
    }
    return nodes_[at].value;
  }

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const Node& n : nodes_) {
      arr.push_back({{"f", n.feature}, {"t", n.threshold}, {"l", n.left}, {"r", n.right},
                     {"v", n.value}});
    }
    return arr;
  }

  static BoostRegTree from_json(const nlohmann::json& arr) {
    BoostRegTree tree;
    for (const auto& jn : arr) {
      Node n;
      n.feature = jn.at("f").get<int>();
      n.threshold = jn.at("t").get<double>();
      n.left = jn.at("l").get<int>();
      n.right = jn.at("r").get<int>();
      n.value = jn.at("v").get<double>();
      tree.nodes_.push_back(n);
    }
    return tree;
  }

 private:
  double leaf_value(double sum_r, double sum_h) const {
    const double denom = params_.newton_gain ? sum_h + params_.lambda : std::max(sum_h, 1e-12);
    if (denom <= 0) return 0;
    return std::clamp(sum_r / denom, -20.0, 20.0);
  }

  int build(const Matrix& X, const std::vector<double>& r, const std::vector<double>& h,
            const std::vector<std::vector<double>>& candidates, std::vector<std::size_t>& idx,
            int depth) {
    const std::size_t n = idx.size();
    double sum_r = 0, sum_h = 0;
    for (std::size_t i : idx) {
      sum_r += r[i];
      sum_h += h[i];
    }

    const int node_id = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    nodes_[node_id].value = leaf_value(sum_r, sum_h);

    if ((params_.max_depth > 0 && depth >= params_.max_depth) ||
        n < 2 * static_cast<std::size_t>(params_.min_leaf) || n < 2) {
      return node_id;
    }

    // Best split across the global candidate grid.
    const std::size_t min_leaf = static_cast<std::size_t>(params_.min_leaf);
    bool found = false;
    std::size_t best_f = 0;
    double best_thr = 0, best_gain = 0;

    std::vector<std::size_t> cnt;
    std::vector<double> acc_r, acc_h;
    for (std::size_t f = 0; f < X.cols(); ++f) {
      const std::vector<double>& cands = candidates[f];
      if (cands.empty()) continue;
      const std::size_t m = cands.size() + 1;  // intervals between thresholds
      cnt.assign(m, 0);
      acc_r.assign(m, 0.0);
      acc_h.assign(m, 0.0);
      for (std::size_t i : idx) {
        const double v = X(i, f);
        const std::size_t k = static_cast<std::size_t>(
            std::lower_bound(cands.begin(), cands.end(), v) - cands.begin());
        ++cnt[k];
        acc_r[k] += r[i];
        acc_h[k] += h[i];
      }
      std::size_t nl = 0;
      double rl = 0, hl = 0;
      for (std::size_t k = 0; k + 1 < m; ++k) {
        nl += cnt[k];
        rl += acc_r[k];
        hl += acc_h[k];
        const std::size_t nr = n - nl;
        if (nl < min_leaf || nr == 0 || nr < min_leaf) continue;
        const double rr = sum_r - rl, hr = sum_h - hl;
        double gain;
        if (params_.newton_gain) {
          gain = 0.5 * (rl * rl / (hl + params_.lambda) + rr * rr / (hr + params_.lambda) -
                        sum_r * sum_r / (sum_h + params_.lambda));
        } else {
          gain = rl * rl / nl + rr * rr / nr - sum_r * sum_r / n;
        }
        if (gain > best_gain + 1e-15 && gain > 1e-12) {
          found = true;
          best_f = f;
          best_thr = cands[k];
          best_gain = gain;
        }
      }
    }
    if (!found) return node_id;

    std::vector<std::size_t> left, right;
    for (std::size_t i : idx) {
      (X(i, best_f) <= best_thr ? left : right).push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();

    nodes_[node_id].feature = static_cast<int>(best_f);
    nodes_[node_id].threshold = best_thr;
    const int l = build(X, r, h, candidates, left, depth + 1);
    const int rgt = build(X, r, h, candidates, right, depth + 1);
    nodes_[node_id].left = l;
    nodes_[node_id].right = rgt;
    return node_id;
  }

  Params params_;
  std::vector<Node> nodes_;
};

enum class BoostMode { EXACT, HIST, NEWTON };

// Stagewise logistic boosting. Every stage fits a regression tree to the
// log-loss residuals and is accepted only if training loss does not
// increase; a failing stage has its contribution halved (up to 30 times)
// and is dropped entirely if that never helps.
class BoostModel : public Model {
 public:
  BoostModel(const ModelSpec& spec, BoostMode mode)
      : mode_(mode),
        max_depth_(spec.get_int("max_depth", 3)),
        min_leaf_(spec.get_int("min_leaf", 1)),
        shrinkage_(spec.get_real("shrinkage", 0.1)),
        n_stages_(spec.get_int("n_stages", 100)),
        bins_(mode == BoostMode::HIST ? spec.get_int("bins", 64) : 0),
        lambda_(mode == BoostMode::NEWTON ? spec.get_real("lambda", 1.0) : 0.0) {
    seed_ = spec.seed;
    if (max_depth_ < 0 || min_leaf_ < 1 || shrinkage_ <= 0 || shrinkage_ > 1 || n_stages_ < 1) {
      throw ConfigError("boosting: bad hyperparameters");
    }
    if (mode == BoostMode::HIST && bins_ < 2) throw ConfigError("boosting: bins must be >= 2");
    if (mode == BoostMode::NEWTON && lambda_ < 0) throw ConfigError("boosting: lambda must be >= 0");
  }

  std::vector<double> decision_scores(const Matrix& X) const override {
    check_input(X);
    std::vector<double> out(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) {
      double raw = f0_;
      for (std::size_t s = 0; s < trees_.size(); ++s) {
        if (scales_[s] != 0) raw += scales_[s] * trees_[s].predict(X.row_ptr(i));
      }
      out[i] = sigmoid(raw);
    }
    return out;
  }

  double threshold() const override { return 0.5; }

  ModelFamily family() const override {
    switch (mode_) {
      case BoostMode::EXACT: return ModelFamily::GRAD_BOOST;
      case BoostMode::HIST: return ModelFamily::HIST_GRAD_BOOST;
      case BoostMode::NEWTON: return ModelFamily::NEWTON_BOOST;
    }
    throw ConfigError("unknown boosting mode");
  }

  // Training log loss before boosting and after each stage.
  const std::vector<double>& training_losses() const { return losses_; }

  nlohmann::json to_json() const override {
    nlohmann::json j;
    j["family"] = model_family_name(family());
    j["max_depth"] = max_depth_;
    j["min_leaf"] = min_leaf_;
    j["shrinkage"] = shrinkage_;
    j["n_stages"] = n_stages_;
    j["bins"] = bins_;
    j["lambda"] = lambda_;
    j["seed"] = seed_;
    j["features"] = n_features_;
    j["rows"] = n_rows_;
    j["f0"] = f0_;
    j["scales"] = scales_;
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& t : trees_) arr.push_back(t.to_json());
    j["trees"] = arr;
    return j;
  }

  static std::unique_ptr<BoostModel> from_json(const nlohmann::json& j) {
    const std::string family = j.at("family").get<std::string>();
    const BoostMode mode = family == "GRAD_BOOST"        ? BoostMode::EXACT
                           : family == "HIST_GRAD_BOOST" ? BoostMode::HIST
                                                         : BoostMode::NEWTON;
    ModelSpec spec;
    spec.family = parse_model_family(family);
    spec.hyper["max_depth"] = j.at("max_depth").get<std::int64_t>();
    spec.hyper["min_leaf"] = j.at("min_leaf").get<std::int64_t>();
    spec.hyper["shrinkage"] = j.at("shrinkage").get<double>();
    spec.hyper["n_stages"] = j.at("n_stages").get<std::int64_t>();
    if (mode == BoostMode::HIST) spec.hyper["bins"] = j.at("bins").get<std::int64_t>();
    if (mode == BoostMode::NEWTON) spec.hyper["lambda"] = j.at("lambda").get<double>();
    spec.seed = j.value("seed", std::uint64_t{0});
    auto model = std::make_unique<BoostModel>(spec, mode);
    model->f0_ = j.at("f0").get<double>();
    model->scales_ = j.at("scales").get<std::vector<double>>();
    for (const auto& jt : j.at("trees")) model->trees_.push_back(BoostRegTree::from_json(jt));
    model->restore_shape(j.at("features").get<std::size_t>(), j.at("rows").get<std::size_t>(),
                         spec.seed);
    return model;
  }

 protected:
  void do_fit(const Matrix& X, const std::vector<int>& y) override {
    const std::size_t n = X.rows();
    trees_.clear();
    scales_.clear();
    losses_.clear();

    double p_mean = 0;
    for (int label : y) p_mean += label;
    p_mean = std::clamp(p_mean / n, 1e-6, 1.0 - 1e-6);
    f0_ = std::log(p_mean / (1.0 - p_mean));

    const auto candidates =
        detail::split_candidates(X, mode_ == BoostMode::HIST ? bins_ : 0);

    BoostRegTree::Params params;
    params.max_depth = max_depth_;
    params.min_leaf = min_leaf_;
    params.newton_gain = mode_ == BoostMode::NEWTON;
    params.lambda = lambda_;

    std::vector<double> raw(n, f0_);
    auto log_loss = [&](const std::vector<double>& scores) {
      double acc = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double p = std::clamp(sigmoid(scores[i]), 1e-15, 1.0 - 1e-15);
        acc += y[i] ? -std::log(p) : -std::log(1.0 - p);
      }
      return acc / n;
    };
    losses_.push_back(log_loss(raw));

    std::vector<double> r(n), h(n), update(n), trial(n);
    for (std::int64_t stage = 0; stage < n_stages_; ++stage) {
      for (std::size_t i = 0; i < n; ++i) {
        const double p = sigmoid(raw[i]);
        r[i] = y[i] - p;
        h[i] = std::max(p * (1.0 - p), 1e-12);
      }

      BoostRegTree tree;
      tree.fit(X, r, h, candidates, params);
      for (std::size_t i = 0; i < n; ++i) update[i] = tree.predict(X.row_ptr(i));

      const double prev = losses_.back();
      double scale = shrinkage_;
      double accepted = prev;
      bool ok = false;
      for (int attempt = 0; attempt < 30; ++attempt) {
        for (std::size_t i = 0; i < n; ++i) trial[i] = raw[i] + scale * update[i];
        const double cand = log_loss(trial);
        if (cand <= prev) {
          ok = true;
          accepted = cand;
          break;
        }
        scale /= 2;
      }
      if (!ok) scale = 0;
      if (scale != 0) {
        for (std::size_t i = 0; i < n; ++i) raw[i] += scale * update[i];
      }
      trees_.push_back(std::move(tree));
      scales_.push_back(scale);
      losses_.push_back(accepted);
    }
  }

 private:
  BoostMode mode_;
  std::int64_t max_depth_;
  std::int64_t min_leaf_;
  double shrinkage_;
  std::int64_t n_stages_;
  std::int64_t bins_;
  double lambda_;

  double f0_ = 0;
  std::vector<BoostRegTree> trees_;
  std::vector<double> scales_;
  std::vector<double> losses_;
};

}  // namespace fxlab
