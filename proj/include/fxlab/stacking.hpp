#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "fxlab/features.hpp"
#include "fxlab/models.hpp"
#include "fxlab/preprocess.hpp"
#include "fxlab/tuning.hpp"

namespace fxlab {

// A stacked estimator: heterogeneous bases, possibly over different feature
// representations, feeding one meta estimator that sees the meta
// representation's features plus one column per base.

struct StackBase {
  ModelSpec spec;
  Representation repr = Representation::D1;
};

struct StackSpec {
  std::vector<StackBase> bases;
  ModelSpec meta;
  Representation meta_repr = Representation::D1;
  bool pass_scores = false;  // base decision scores instead of hard labels

  void validate() const {
    if (bases.empty()) throw ConfigError("stack: at least one base estimator required");
  }

  nlohmann::json to_json() const {
    nlohmann::json jb = nlohmann::json::array();
    for (const StackBase& b : bases) {
      jb.push_back({{"spec", b.spec.to_json()}, {"repr", representation_name(b.repr)}});
    }
    return {{"bases", jb},
            {"meta", meta.to_json()},
            {"meta_repr", representation_name(meta_repr)},
            {"pass_scores", pass_scores}};
  }

  static StackSpec from_json(const nlohmann::json& j) {
    StackSpec out;
    for (const auto& jb : j.at("bases")) {
      out.bases.push_back({ModelSpec::from_json(jb.at("spec")),
                           parse_representation(jb.at("repr").get<std::string>())});
    }
    out.meta = ModelSpec::from_json(j.at("meta"));
    out.meta_repr = parse_representation(j.at("meta_repr").get<std::string>());
    out.pass_scores = j.value("pass_scores", false);
    out.validate();
    return out;
  }
};

using DatasetBundle = std::map<Representation, FeatureMatrix>;

inline const FeatureMatrix& bundle_get(const DatasetBundle& bundle, Representation repr) {
  const auto it = bundle.find(repr);
  if (it == bundle.end()) {
    throw ConfigError(std::string("stack: dataset bundle lacks representation ") +
                      representation_name(repr));
  }
  return it->second;
}

namespace detail {

inline std::map<Date, std::size_t> date_index(const FeatureMatrix& m) {
  std::map<Date, std::size_t> out;
  for (std::size_t r = 0; r < m.dates.size(); ++r) out[m.dates[r]] = r;
  return out;
}

inline std::vector<std::size_t> rows_at(const std::map<Date, std::size_t>& index,
                                        const std::vector<Date>& dates) {
  std::vector<std::size_t> out;
  out.reserve(dates.size());
  for (Date d : dates) {
    const auto it = index.find(d);
    if (it == index.end()) {
      throw DataError("stack: representation lacks a row for " + d.to_string());
    }
    out.push_back(it->second);
  }
  return out;
}

inline std::vector<const FeatureMatrix*> stack_matrices(const StackSpec& spec,
                                                        const DatasetBundle& bundle) {
  std::vector<const FeatureMatrix*> out;
  for (const StackBase& b : spec.bases) out.push_back(&bundle_get(bundle, b.repr));
  out.push_back(&bundle_get(bundle, spec.meta_repr));
  return out;
}

}  // namespace detail

// Every meta training row is an out-of-fold prediction: provenance records
// which fold produced it and what the bases saw when they did.
struct MetaRowProvenance {
  Date date;
  std::size_t fold_index = 0;
  DateRange base_training;
};

struct OofResult {
  std::vector<Date> dates;
  Matrix base_outputs{0, 0};  // one column per base, fold-wise out-of-fold
  std::vector<int> labels;
  std::vector<MetaRowProvenance> provenance;
};

// Rolling out-of-fold pass: for each fold, bases train strictly on that
// fold's training range and emit predictions for its validation range.
// Rows before the first validation segment never reach the meta estimator.
inline OofResult oof_meta_features(const StackSpec& spec, const DatasetBundle& bundle,
                                   const FoldPlan& plan, bool use_pca, std::uint64_t seed) {
  spec.validate();
  if (plan.folds.empty()) throw ConfigError("stack: fold plan is empty");
  const auto mats = detail::stack_matrices(spec, bundle);
  const std::vector<Date> shared = common_dates(mats);
  if (shared.empty()) throw DataError("stack: representations share no dates");

  const FeatureMatrix& meta_data = bundle_get(bundle, spec.meta_repr);
  const auto meta_index = detail::date_index(meta_data);

  OofResult out;
  std::vector<std::vector<double>> rows;  // staged base outputs
  for (std::size_t k = 0; k < plan.folds.size(); ++k) {
    const Fold& fold = plan.folds[k];
    std::vector<Date> train_dates, val_dates;
    for (Date d : shared) {
      if (fold.train.contains(d)) train_dates.push_back(d);
      if (fold.validation.contains(d)) val_dates.push_back(d);
    }
    if (train_dates.size() < 2 || val_dates.empty()) {
      throw DataError("stack: fold " + std::to_string(k + 1) + " has too few rows");
    }

    std::vector<std::vector<double>> fold_outputs(spec.bases.size());
    for (std::size_t b = 0; b < spec.bases.size(); ++b) {
      const StackBase& base = spec.bases[b];
      const FeatureMatrix& data = bundle_get(bundle, base.repr);
      const auto index = detail::date_index(data);
      const Matrix Xtr = data.X.select_rows(detail::rows_at(index, train_dates));
      const auto val_rows = detail::rows_at(index, val_dates);
      const Matrix Xva = data.X.select_rows(val_rows);
      std::vector<int> ytr;
      for (std::size_t r : detail::rows_at(index, train_dates)) ytr.push_back(data.labels[r]);

      const FittedScaler scaler =
          FittedScaler::fit(select_policy(base.spec, use_pca), Xtr);
      ModelSpec fold_spec = base.spec;
      fold_spec.seed = derive_seed(derive_seed(seed, b), k);
      auto model = make_model(fold_spec);
      model->fit(scaler.apply(Xtr), ytr);
      if (spec.pass_scores) {
        fold_outputs[b] = model->decision_scores(scaler.apply(Xva));
      } else {
        for (int p : model->predict(scaler.apply(Xva))) {
          fold_outputs[b].push_back(static_cast<double>(p));
        }
      }
    }

    for (std::size_t i = 0; i < val_dates.size(); ++i) {
      std::vector<double> row(spec.bases.size());
      for (std::size_t b = 0; b < spec.bases.size(); ++b) row[b] = fold_outputs[b][i];
      rows.push_back(std::move(row));
      out.dates.push_back(val_dates[i]);
      out.labels.push_back(meta_data.labels[meta_index.at(val_dates[i])]);
      out.provenance.push_back({val_dates[i], k, fold.train});
    }
  }

  out.base_outputs = Matrix(rows.size(), spec.bases.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t b = 0; b < spec.bases.size(); ++b) out.base_outputs(r, b) = rows[r][b];
  }
  return out;
}

struct FittedBase {
  ModelSpec spec;
  Representation repr = Representation::D1;
  FittedScaler scaler;
  std::shared_ptr<Model> model;
};

struct StackModel {
  StackSpec spec;
  std::vector<FittedBase> bases;
  FittedScaler meta_scaler;
  std::shared_ptr<Model> meta;
  std::vector<std::string> meta_feature_names;
  std::vector<MetaRowProvenance> provenance;
  DateRange base_refit_range;

  nlohmann::json to_json() const {
    nlohmann::json jb = nlohmann::json::array();
    for (const FittedBase& b : bases) {
      jb.push_back({{"repr", representation_name(b.repr)},
                    {"scaler", b.scaler.to_json()},
                    {"model", b.model->to_json()}});
    }
    return {{"spec", spec.to_json()},
            {"bases", jb},
            {"meta_scaler", meta_scaler.to_json()},
            {"meta", meta->to_json()},
            {"meta_feature_names", meta_feature_names}};
  }

  static StackModel from_json(const nlohmann::json& j) {
    StackModel out;
    out.spec = StackSpec::from_json(j.at("spec"));
    std::size_t b = 0;
    for (const auto& jb : j.at("bases")) {
      FittedBase base;
      base.spec = out.spec.bases[b].spec;
      base.repr = parse_representation(jb.at("repr").get<std::string>());
      base.scaler = FittedScaler::from_json(jb.at("scaler"));
      base.model = std::shared_ptr<Model>(model_from_json(jb.at("model")).release());
      out.bases.push_back(std::move(base));
      ++b;
    }
    out.meta_scaler = FittedScaler::from_json(j.at("meta_scaler"));
    out.meta = std::shared_ptr<Model>(model_from_json(j.at("meta")).release());
    out.meta_feature_names = j.at("meta_feature_names").get<std::vector<std::string>>();
    return out;
  }
};

namespace detail {

// Meta design matrix: the meta representation's features for the given rows
// with the base output columns appended after them.
inline Matrix meta_design(const FeatureMatrix& meta_data, const std::vector<std::size_t>& rows,
                          const Matrix& base_outputs) {
  Matrix X(rows.size(), meta_data.X.cols() + base_outputs.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < meta_data.X.cols(); ++j) X(i, j) = meta_data.X(rows[i], j);
    for (std::size_t b = 0; b < base_outputs.cols(); ++b) {
      X(i, meta_data.X.cols() + b) = base_outputs(i, b);
    }
  }
  return X;
}

}  // namespace detail

// Fit the whole stack: out-of-fold pass for the meta training set, then each
// base refits on all available training rows of its own representation.
inline StackModel train_stack(const StackSpec& spec, const DatasetBundle& bundle,
                              const FoldPlan& plan, bool use_pca, std::uint64_t seed) {
  const OofResult oof = oof_meta_features(spec, bundle, plan, use_pca, seed);

  const FeatureMatrix& meta_data = bundle_get(bundle, spec.meta_repr);
  const auto meta_index = detail::date_index(meta_data);
  const Matrix meta_X =
      detail::meta_design(meta_data, detail::rows_at(meta_index, oof.dates), oof.base_outputs);

  StackModel out;
  out.spec = spec;
  out.provenance = oof.provenance;
  out.meta_feature_names = meta_data.names;
  for (std::size_t b = 0; b < spec.bases.size(); ++b) {
    out.meta_feature_names.push_back(
        "base_" + std::to_string(b) + "_" + model_family_name(spec.bases[b].spec.family));
  }

  out.meta_scaler = FittedScaler::fit(select_policy(spec.meta, use_pca), meta_X);
  ModelSpec meta_spec = spec.meta;
  meta_spec.seed = derive_seed(seed, 1000003);
  out.meta = std::shared_ptr<Model>(make_model(meta_spec).release());
  out.meta->fit(out.meta_scaler.apply(meta_X), oof.labels);

  for (std::size_t b = 0; b < spec.bases.size(); ++b) {
    const StackBase& base = spec.bases[b];
    const FeatureMatrix& data = bundle_get(bundle, base.repr);
    FittedBase fitted;
    fitted.spec = base.spec;
    fitted.repr = base.repr;
    fitted.scaler = FittedScaler::fit(select_policy(base.spec, use_pca), data.X);
    ModelSpec refit_spec = base.spec;
    refit_spec.seed = derive_seed(derive_seed(seed, b), 1000003);
    fitted.model = std::shared_ptr<Model>(make_model(refit_spec).release());
    fitted.model->fit(fitted.scaler.apply(data.X), data.labels);
    out.bases.push_back(std::move(fitted));
    out.base_refit_range = {data.dates.front(), data.dates.back()};
  }
  return out;
}

// Predictions at the given dates; every representation the stack uses must
// carry a row for each date.
inline std::vector<int> predict_stack(const StackModel& stack, const DatasetBundle& bundle,
                                      const std::vector<Date>& dates) {
  Matrix base_outputs(dates.size(), stack.bases.size());
  for (std::size_t b = 0; b < stack.bases.size(); ++b) {
    const FittedBase& base = stack.bases[b];
    const FeatureMatrix& data = bundle_get(bundle, base.repr);
    const Matrix X = base.scaler.apply(
        data.X.select_rows(detail::rows_at(detail::date_index(data), dates)));
    if (stack.spec.pass_scores) {
      const std::vector<double> scores = base.model->decision_scores(X);
      for (std::size_t i = 0; i < dates.size(); ++i) base_outputs(i, b) = scores[i];
    } else {
      const std::vector<int> preds = base.model->predict(X);
      for (std::size_t i = 0; i < dates.size(); ++i) {
        base_outputs(i, b) = static_cast<double>(preds[i]);
      }
    }
  }
  const FeatureMatrix& meta_data = bundle_get(bundle, stack.spec.meta_repr);
  const Matrix meta_X = detail::meta_design(
      meta_data, detail::rows_at(detail::date_index(meta_data), dates), base_outputs);
  return stack.meta->predict(stack.meta_scaler.apply(meta_X));
}

}  // namespace fxlab
