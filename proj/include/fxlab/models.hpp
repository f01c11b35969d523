#pragma once

#include <memory>

#include "fxlab/models/boosting.hpp"
#include "fxlab/models/ensemble.hpp"
#include "fxlab/models/knn.hpp"
#include "fxlab/models/logistic.hpp"
#include "fxlab/models/model.hpp"
#include "fxlab/models/spec.hpp"
#include "fxlab/models/svm.hpp"
#include "fxlab/models/tree.hpp"

namespace fxlab {

inline std::unique_ptr<Model> make_model(const ModelSpec& spec) {
  switch (spec.family) {
    case ModelFamily::LOGISTIC: return std::make_unique<LogisticModel>(spec);
    case ModelFamily::KNN: return std::make_unique<KnnModel>(spec);
    case ModelFamily::SVM: return std::make_unique<SvmModel>(spec);
    case ModelFamily::TREE: return std::make_unique<TreeModel>(spec);
    case ModelFamily::BAGGING: return std::make_unique<BaggingModel>(spec);
    case ModelFamily::RANDOM_FOREST: return std::make_unique<ForestModel>(spec, false);
    case ModelFamily::EXTRA_TREES: return std::make_unique<ForestModel>(spec, true);
    case ModelFamily::GRAD_BOOST: return std::make_unique<BoostModel>(spec, BoostMode::EXACT);
    case ModelFamily::HIST_GRAD_BOOST: return std::make_unique<BoostModel>(spec, BoostMode::HIST);
    case ModelFamily::NEWTON_BOOST: return std::make_unique<BoostModel>(spec, BoostMode::NEWTON);
  }
  throw ConfigError("unknown model family");
}

inline std::unique_ptr<Model> model_from_json(const nlohmann::json& j) {
  const ModelFamily family = parse_model_family(j.at("family").get<std::string>());
  switch (family) {
    case ModelFamily::LOGISTIC: return LogisticModel::from_json(j);
    case ModelFamily::KNN: return KnnModel::from_json(j);
    case ModelFamily::SVM: return SvmModel::from_json(j);
    case ModelFamily::TREE: return TreeModel::from_json(j);
    case ModelFamily::BAGGING: return BaggingModel::from_json(j);
    case ModelFamily::RANDOM_FOREST:
    case ModelFamily::EXTRA_TREES: return ForestModel::from_json(j);
    case ModelFamily::GRAD_BOOST:
    case ModelFamily::HIST_GRAD_BOOST:
    case ModelFamily::NEWTON_BOOST: return BoostModel::from_json(j);
  }
  throw ConfigError("unknown model family");
}

}  // namespace fxlab
