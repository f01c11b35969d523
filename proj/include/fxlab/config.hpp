#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fxlab/backtest.hpp"
#include "fxlab/manifest.hpp"
#include "fxlab/stacking.hpp"
#include "fxlab/synth.hpp"
#include "fxlab/tuning.hpp"

namespace fxlab {

// Everything one experiment needs, loaded once from a JSON file. CLI flags
// may override seed, jobs, and out_dir after loading.
struct ExperimentConfig {
  // data
  std::string data_dir;
  std::vector<std::string> instruments = default_instrument_ids();
  std::vector<std::string> indicators = default_indicator_ids();
  std::string target = "EURUSD";

  // datasets
  std::vector<Representation> representations = {Representation::D3};
  std::size_t lag_depth = 90;
  std::vector<std::string> indicator_sources;  // empty = every instrument

  // estimator
  bool is_stack = false;
  ModelSpec model;
  StackSpec stack;
  bool use_pca = false;

  // folds and tuning
  FoldPlanSpec fold;
  TierBudgets budgets;
  int max_tier = 3;

  // backtest
  std::vector<Protocol> protocols = {Protocol::ANNUAL};
  int test_year = 2022;

  // run
  std::uint64_t seed = 1;
  int jobs = 1;
  std::string out_dir = "runs/default";

  // synth command
  SynthConfig synth;

  nlohmann::json to_json() const {
    nlohmann::json jr = nlohmann::json::array();
    for (Representation r : representations) jr.push_back(representation_name(r));
    nlohmann::json jp = nlohmann::json::array();
    for (Protocol p : protocols) jp.push_back(protocol_name(p));
    nlohmann::json j{{"data_dir", data_dir},
                     {"instruments", instruments},
                     {"indicators", indicators},
                     {"target", target},
                     {"representations", jr},
                     {"lag_depth", lag_depth},
                     {"indicator_sources", indicator_sources},
                     {"is_stack", is_stack},
                     {"use_pca", use_pca},
                     {"fold",
                      {{"train_start", fold.train_start.to_string()},
                       {"train_end", fold.train_end.to_string()},
                       {"first_validation", fold.first_validation.to_string()},
                       {"n_folds", fold.n_folds}}},
                     {"budgets", {{"tier1", budgets.tier1}, {"tier2", budgets.tier2},
                                  {"tier3", budgets.tier3}}},
                     {"max_tier", max_tier},
                     {"protocols", jp},
                     {"test_year", test_year},
                     {"seed", seed},
                     {"jobs", jobs},
                     {"out_dir", out_dir},
                     {"synth", synth.to_json()}};
    if (is_stack) {
      j["stack"] = stack.to_json();
    } else {
      j["model"] = model.to_json();
    }
    return j;
  }

  static ExperimentConfig from_json(const nlohmann::json& j) {
    ExperimentConfig out;
    try {
      out.data_dir = j.value("data_dir", std::string());
      if (j.contains("instruments")) {
        out.instruments = j.at("instruments").get<std::vector<std::string>>();
      }
      if (j.contains("indicators")) {
        out.indicators = j.at("indicators").get<std::vector<std::string>>();
      }
      out.target = j.value("target", std::string("EURUSD"));
      if (j.contains("representations")) {
        out.representations.clear();
        for (const auto& r : j.at("representations")) {
          out.representations.push_back(parse_representation(r.get<std::string>()));
        }
      }
      out.lag_depth = j.value("lag_depth", std::size_t{90});
      if (j.contains("indicator_sources")) {
        out.indicator_sources = j.at("indicator_sources").get<std::vector<std::string>>();
      }
      out.is_stack = j.contains("stack");
      if (out.is_stack) {
        out.stack = StackSpec::from_json(j.at("stack"));
      } else if (j.contains("model")) {
        out.model = ModelSpec::from_json(j.at("model"));
      } else {
        throw ConfigError("config: either \"model\" or \"stack\" is required");
      }
      out.use_pca = j.value("use_pca", false);
      if (j.contains("fold")) {
        const auto& jf = j.at("fold");
        if (jf.contains("train_start")) {
          out.fold.train_start = Date::parse(jf.at("train_start").get<std::string>());
        }
        if (jf.contains("train_end")) {
          out.fold.train_end = Date::parse(jf.at("train_end").get<std::string>());
        }
        if (jf.contains("first_validation")) {
          out.fold.first_validation = Date::parse(jf.at("first_validation").get<std::string>());
        }
        out.fold.n_folds = jf.value("n_folds", 8);
      }
      if (j.contains("budgets")) {
        const auto& jb = j.at("budgets");
        out.budgets.tier1 = jb.value("tier1", 100);
        out.budgets.tier2 = jb.value("tier2", 200);
        out.budgets.tier3 = jb.value("tier3", 300);
      }
      out.max_tier = j.value("max_tier", 3);
      if (out.max_tier < 1 || out.max_tier > 3) throw ConfigError("config: max_tier in 1..3");
      if (j.contains("protocols")) {
        out.protocols.clear();
        for (const auto& p : j.at("protocols")) {
          out.protocols.push_back(parse_protocol(p.get<std::string>()));
        }
        if (out.protocols.empty()) throw ConfigError("config: protocols must not be empty");
      }
      out.test_year = j.value("test_year", 2022);
      out.seed = j.value("seed", std::uint64_t{1});
      out.jobs = j.value("jobs", 1);
      if (out.jobs < 1) throw ConfigError("config: jobs must be >= 1");
      out.out_dir = j.value("out_dir", std::string("runs/default"));
      if (j.contains("synth")) out.synth = SynthConfig::from_json(j.at("synth"));
      if (out.representations.empty()) {
        throw ConfigError("config: representations must not be empty");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
    return out;
  }

  // Hash of the canonical JSON form; identifies the run directory.
  std::string fingerprint() const { return hash_hex(fnv1a64(to_json().dump())); }
};

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return ExperimentConfig::from_json(j);
}

}  // namespace fxlab
