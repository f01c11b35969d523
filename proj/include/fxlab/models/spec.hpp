#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "fxlab/errors.hpp"
#include "fxlab/features.hpp"

#include <json.hpp>

namespace fxlab {

enum class ModelFamily {
  LOGISTIC,
  KNN,
  SVM,
  TREE,
  BAGGING,
  RANDOM_FOREST,
  EXTRA_TREES,
  GRAD_BOOST,
  HIST_GRAD_BOOST,
  NEWTON_BOOST,
};

inline const char* model_family_name(ModelFamily f) {
  switch (f) {
    case ModelFamily::LOGISTIC: return "LOGISTIC";
    case ModelFamily::KNN: return "KNN";
    case ModelFamily::SVM: return "SVM";
    case ModelFamily::TREE: return "TREE";
    case ModelFamily::BAGGING: return "BAGGING";
    case ModelFamily::RANDOM_FOREST: return "RANDOM_FOREST";
    case ModelFamily::EXTRA_TREES: return "EXTRA_TREES";
    case ModelFamily::GRAD_BOOST: return "GRAD_BOOST";
    case ModelFamily::HIST_GRAD_BOOST: return "HIST_GRAD_BOOST";
    case ModelFamily::NEWTON_BOOST: return "NEWTON_BOOST";
  }
  throw ConfigError("unknown model family");
}

inline ModelFamily parse_model_family(const std::string& s) {
  static const std::map<std::string, ModelFamily> names = {
      {"LOGISTIC", ModelFamily::LOGISTIC},
      {"KNN", ModelFamily::KNN},
      {"SVM", ModelFamily::SVM},
      {"TREE", ModelFamily::TREE},
      {"BAGGING", ModelFamily::BAGGING},
      {"RANDOM_FOREST", ModelFamily::RANDOM_FOREST},
      {"EXTRA_TREES", ModelFamily::EXTRA_TREES},
      {"GRAD_BOOST", ModelFamily::GRAD_BOOST},
      {"HIST_GRAD_BOOST", ModelFamily::HIST_GRAD_BOOST},
      {"NEWTON_BOOST", ModelFamily::NEWTON_BOOST},
  };
  const auto it = names.find(s);
  if (it == names.end()) throw ConfigError("unknown model family: " + s);
  return it->second;
}

using HyperValue = std::variant<double, std::int64_t, std::string, bool>;

struct ModelSpec {
  ModelFamily family = ModelFamily::LOGISTIC;
  std::map<std::string, HyperValue> hyper;
  std::uint64_t seed = 0;
  std::shared_ptr<ModelSpec> inner;  // BAGGING only

  bool has(const std::string& name) const { return hyper.count(name) > 0; }

  double get_real(const std::string& name, double fallback) const {
    const auto it = hyper.find(name);
    if (it == hyper.end()) return fallback;
    if (const double* d = std::get_if<double>(&it->second)) return *d;
    if (const std::int64_t* i = std::get_if<std::int64_t>(&it->second)) {
      return static_cast<double>(*i);
    }
    throw ConfigError("hyperparameter " + name + " is not numeric");
  }

  std::int64_t get_int(const std::string& name, std::int64_t fallback) const {
    const auto it = hyper.find(name);
    if (it == hyper.end()) return fallback;
    if (const std::int64_t* i = std::get_if<std::int64_t>(&it->second)) return *i;
    if (const double* d = std::get_if<double>(&it->second)) return static_cast<std::int64_t>(*d);
    throw ConfigError("hyperparameter " + name + " is not an integer");
  }

  std::string get_str(const std::string& name, const std::string& fallback) const {
    const auto it = hyper.find(name);
    if (it == hyper.end()) return fallback;
    if (const std::string* s = std::get_if<std::string>(&it->second)) return *s;
    throw ConfigError("hyperparameter " + name + " is not a string");
  }

  bool get_bool(const std::string& name, bool fallback) const {
    const auto it = hyper.find(name);
    if (it == hyper.end()) return fallback;
    if (const bool* b = std::get_if<bool>(&it->second)) return *b;
    throw ConfigError("hyperparameter " + name + " is not a boolean");
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["family"] = model_family_name(family);
    j["seed"] = seed;
    nlohmann::json h = nlohmann::json::object();
    for (const auto& [name, value] : hyper) {
      std::visit([&](const auto& v) { h[name] = v; }, value);
    }
    j["hyper"] = h;
    if (inner) j["inner"] = inner->to_json();
    return j;
  }

  static ModelSpec from_json(const nlohmann::json& j) {
    ModelSpec spec;
    spec.family = parse_model_family(j.at("family").get<std::string>());
    spec.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("hyper")) {
      for (auto it = j["hyper"].begin(); it != j["hyper"].end(); ++it) {
        const auto& v = it.value();
        if (v.is_boolean()) {
          spec.hyper[it.key()] = v.get<bool>();
        } else if (v.is_number_integer() || v.is_number_unsigned()) {
          spec.hyper[it.key()] = v.get<std::int64_t>();
        } else if (v.is_number_float()) {
          spec.hyper[it.key()] = v.get<double>();
        } else if (v.is_string()) {
          spec.hyper[it.key()] = v.get<std::string>();
        } else {
          throw ConfigError("hyperparameter " + it.key() + " has unsupported JSON type");
        }
      }
    }
    if (j.contains("inner")) spec.inner = std::make_shared<ModelSpec>(from_json(j["inner"]));
    if (spec.family == ModelFamily::BAGGING && !spec.inner) {
      throw ConfigError("BAGGING spec requires an inner model");
    }
    return spec;
  }
};

// Tree-family models read raw integer date features; everything else gets
// the periodic sine/cosine encoding.
inline bool is_tree_family(const ModelSpec& spec) {
  switch (spec.family) {
    case ModelFamily::TREE:
    case ModelFamily::RANDOM_FOREST:
    case ModelFamily::EXTRA_TREES:
    case ModelFamily::GRAD_BOOST:
    case ModelFamily::HIST_GRAD_BOOST:
    case ModelFamily::NEWTON_BOOST: return true;
    case ModelFamily::BAGGING:
      if (!spec.inner) throw ConfigError("BAGGING spec requires an inner model");
      return is_tree_family(*spec.inner);
    default: return false;
  }
}

inline DateFamily date_family_for(const ModelSpec& spec) {
  return is_tree_family(spec) ? DateFamily::TREE : DateFamily::CONTINUOUS;
}

// ---------------------------------------------------------------------------
// Hyperparameter search spaces

struct Dimension {
  enum class Kind { REAL, INT, CATEGORICAL, BOOLEAN };

  std::string name;
  Kind kind = Kind::REAL;
  double lo = 0, hi = 1;       // REAL / INT bounds (inclusive)
  bool log_scale = false;      // REAL only
  std::vector<std::string> options;  // CATEGORICAL only

  void validate() const {
    if (kind == Kind::REAL || kind == Kind::INT) {
      if (!(lo < hi)) throw ConfigError("dimension " + name + ": requires lo < hi");
      if (kind == Kind::REAL && log_scale && lo <= 0) {
        throw ConfigError("dimension " + name + ": log scale requires lo > 0");
      }
    }
    if (kind == Kind::CATEGORICAL && options.empty()) {
      throw ConfigError("dimension " + name + ": no options");
    }
  }

  static Dimension real(std::string name, double lo, double hi, bool log_scale = false) {
    Dimension d;
    d.name = std::move(name);
    d.kind = Kind::REAL;
    d.lo = lo;
    d.hi = hi;
    d.log_scale = log_scale;
    d.validate();
    return d;
  }
  static Dimension integer(std::string name, std::int64_t lo, std::int64_t hi) {
    Dimension d;
    d.name = std::move(name);
    d.kind = Kind::INT;
    d.lo = static_cast<double>(lo);
    d.hi = static_cast<double>(hi);
    d.validate();
    return d;
  }
  static Dimension categorical(std::string name, std::vector<std::string> options) {
    Dimension d;
    d.name = std::move(name);
    d.kind = Kind::CATEGORICAL;
    d.options = std::move(options);
    d.validate();
    return d;
  }
  static Dimension boolean(std::string name) {
    Dimension d;
    d.name = std::move(name);
    d.kind = Kind::BOOLEAN;
    return d;
  }
};

struct SearchSpace {
  std::vector<Dimension> dims;

  const Dimension& dim(const std::string& name) const {
    for (const auto& d : dims) {
      if (d.name == name) return d;
    }
    throw ConfigError("search space has no dimension " + name);
  }
};

// Engineering defaults: ranges wide enough for the search to explore, not
// tuned recommendations.
inline SearchSpace default_search_space(ModelFamily family) {
  SearchSpace s;
  switch (family) {
    case ModelFamily::LOGISTIC:
      s.dims.push_back(Dimension::real("l2", 1e-6, 1e2, true));
      s.dims.push_back(Dimension::real("lr", 1e-4, 1.0, true));
      s.dims.push_back(Dimension::integer("iters", 100, 5000));
      break;
    case ModelFamily::KNN:
      s.dims.push_back(Dimension::integer("k", 1, 101));
      break;
    case ModelFamily::SVM:
      s.dims.push_back(
          Dimension::categorical("kernel", {"linear", "rbf", "sigmoid", "polynomial"}));
      s.dims.push_back(Dimension::real("c", 1e-3, 1e3, true));
      s.dims.push_back(Dimension::real("gamma", 1e-5, 10.0, true));
      s.dims.push_back(Dimension::integer("degree", 2, 5));
      s.dims.push_back(Dimension::real("coef0", -1.0, 1.0));
      break;
    case ModelFamily::TREE:
      s.dims.push_back(Dimension::integer("max_depth", 1, 20));
      s.dims.push_back(Dimension::integer("min_leaf", 1, 50));
      break;
    case ModelFamily::BAGGING:
      s.dims.push_back(Dimension::integer("n_estimators", 10, 500));
      break;
    case ModelFamily::RANDOM_FOREST:
    case ModelFamily::EXTRA_TREES:
      s.dims.push_back(Dimension::integer("max_depth", 1, 20));
      s.dims.push_back(Dimension::integer("min_leaf", 1, 50));
      s.dims.push_back(Dimension::integer("n_trees", 10, 500));
      break;
    case ModelFamily::GRAD_BOOST:
    case ModelFamily::NEWTON_BOOST:
    case ModelFamily::HIST_GRAD_BOOST:
      s.dims.push_back(Dimension::integer("max_depth", 1, 20));
      s.dims.push_back(Dimension::integer("min_leaf", 1, 50));
      s.dims.push_back(Dimension::real("shrinkage", 0.01, 0.5, true));
      s.dims.push_back(Dimension::integer("n_stages", 10, 500));
      if (family == ModelFamily::HIST_GRAD_BOOST) {
        s.dims.push_back(Dimension::integer("bins", 16, 255));
      }
      if (family == ModelFamily::NEWTON_BOOST) {
        s.dims.push_back(Dimension::real("lambda", 1e-3, 10.0, true));
      }
      break;
  }
  return s;
}

}  // namespace fxlab
