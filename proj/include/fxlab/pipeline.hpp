#pragma once

#include <filesystem>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fxlab/backtest.hpp"
#include "fxlab/config.hpp"
#include "fxlab/features.hpp"
#include "fxlab/manifest.hpp"
#include "fxlab/market_data.hpp"
#include "fxlab/report.hpp"
#include "fxlab/stacking.hpp"
#include "fxlab/synth.hpp"
#include "fxlab/tuning.hpp"

namespace fxlab::pipeline {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Artifact layout under the run directory

struct Paths {
  fs::path root;

  fs::path panel_dir() const { return root / "panel"; }
  fs::path panel_csv() const { return panel_dir() / "panel.csv"; }
  fs::path panel_meta() const { return panel_dir() / "panel_meta.json"; }
  fs::path panel_manifest() const { return panel_dir() / "manifest.json"; }

  fs::path datasets_dir() const { return root / "datasets"; }
  std::string dataset_stem(Representation r, DateFamily f) const {
    return std::string(representation_name(r)) + "_" +
           (f == DateFamily::TREE ? "tree" : "continuous");
  }
  fs::path dataset_csv(Representation r, DateFamily f) const {
    return datasets_dir() / (dataset_stem(r, f) + ".csv");
  }
  fs::path dataset_meta(Representation r, DateFamily f) const {
    return datasets_dir() / (dataset_stem(r, f) + "_meta.json");
  }
  fs::path datasets_manifest() const { return datasets_dir() / "manifest.json"; }

  fs::path tune_dir() const { return root / "tune"; }
  fs::path trials_csv(const std::string& label) const {
    return tune_dir() / ("trials_" + label + ".csv");
  }
  fs::path best_json(const std::string& label) const {
    return tune_dir() / ("best_" + label + ".json");
  }
  fs::path tune_manifest() const { return tune_dir() / "manifest.json"; }

  fs::path model_dir() const { return root / "model"; }
  fs::path model_json(const std::string& label) const {
    return model_dir() / ("model_" + label + ".json");
  }
  fs::path model_manifest() const { return model_dir() / "manifest.json"; }

  fs::path results_dir(const std::string& fingerprint) const {
    return root / "results" / fingerprint;
  }
};

inline Paths paths_for(const ExperimentConfig& config) { return {fs::path(config.out_dir)}; }

inline bool up_to_date(const fs::path& manifest_path, const RunManifest& want, bool force) {
  if (force || !fs::exists(manifest_path)) return false;
  try {
    return load_manifest(manifest_path).matches(want);
  } catch (const Error&) {
    return false;
  }
}

inline RunManifest base_manifest(const ExperimentConfig& config) {
  RunManifest m;
  m.seed = config.seed;
  m.config_fingerprint = config.fingerprint();
  return m;
}

// ---------------------------------------------------------------------------
// synth and ingest

inline bool run_synth(const ExperimentConfig& config, bool force) {
  if (config.data_dir.empty()) throw ConfigError("synth: data_dir is required");
  RunManifest want = base_manifest(config);
  const fs::path manifest_path = fs::path(config.data_dir) / "manifest.json";
  if (up_to_date(manifest_path, want, force)) return false;
  write_synth_data(config.synth, config.seed, config.data_dir);
  save_manifest(want, manifest_path);
  return true;
}

inline bool run_ingest(const ExperimentConfig& config, bool force) {
  if (config.data_dir.empty()) throw ConfigError("ingest: data_dir is required");
  const Paths paths = paths_for(config);
  RunManifest want = base_manifest(config);
  std::vector<std::pair<std::string, fs::path>> ohlcv_files, calendar_files;
  for (const std::string& id : config.instruments) {
    const fs::path p = fs::path(config.data_dir) / "ohlcv" / (id + ".csv");
    ohlcv_files.emplace_back(id, p);
    want.inputs["ohlcv/" + id + ".csv"] = hash_file(p);
  }
  for (const std::string& id : config.indicators) {
    const fs::path p = fs::path(config.data_dir) / "calendar" / (id + ".csv");
    calendar_files.emplace_back(id, p);
    want.inputs["calendar/" + id + ".csv"] = hash_file(p);
  }
  if (up_to_date(paths.panel_manifest(), want, force)) return false;

  std::vector<OhlcvSeries> series;
  for (const auto& [id, p] : ohlcv_files) series.push_back(load_ohlcv_csv(p, id));
  std::vector<EconomicCalendar> calendars;
  for (const auto& [id, p] : calendar_files) calendars.push_back(load_calendar_csv(p, id));
  const AlignedPanel panel = build_panel(series, calendars, config.target);
  fs::create_directories(paths.panel_dir());
  save_panel(panel, paths.panel_csv(), paths.panel_meta());
  save_manifest(want, paths.panel_manifest());
  return true;
}

// ---------------------------------------------------------------------------
// dataset building

inline std::set<std::pair<Representation, DateFamily>> needed_datasets(
    const ExperimentConfig& config) {
  std::set<std::pair<Representation, DateFamily>> out;
  if (config.is_stack) {
    for (const StackBase& b : config.stack.bases) {
      out.insert({b.repr, date_family_for(b.spec)});
    }
    out.insert({config.stack.meta_repr, date_family_for(config.stack.meta)});
  } else {
    for (Representation r : config.representations) {
      out.insert({r, date_family_for(config.model)});
    }
  }
  return out;
}

inline bool run_build(const ExperimentConfig& config, bool force) {
  const Paths paths = paths_for(config);
  RunManifest want = base_manifest(config);
  want.inputs["panel/panel.csv"] = hash_file(paths.panel_csv());
  if (up_to_date(paths.datasets_manifest(), want, force)) return false;

  AlignedPanel panel = load_panel(paths.panel_csv(), paths.panel_meta());
  const TransformLedger ledger = fit_transforms(panel, config.fold.last_validation_end());
  apply_transforms(panel, ledger);

  fs::create_directories(paths.datasets_dir());
  for (const auto& [repr, family] : needed_datasets(config)) {
    DatasetBuildConfig build;
    build.repr = repr;
    build.date_family = family;
    build.lag_depth = config.lag_depth;
    build.indicator_sources =
        config.indicator_sources.empty() ? panel.instrument_ids : config.indicator_sources;
    const FeatureMatrix m = build_dataset(panel, build);
    save_matrix(m, paths.dataset_csv(repr, family), paths.dataset_meta(repr, family), ledger);
  }
  save_manifest(want, paths.datasets_manifest());
  return true;
}

inline FeatureMatrix load_dataset(const ExperimentConfig& config, Representation r,
                                  DateFamily f) {
  const Paths paths = paths_for(config);
  return load_matrix(paths.dataset_csv(r, f), paths.dataset_meta(r, f));
}

inline DatasetBundle load_stack_bundle(const ExperimentConfig& config) {
  DatasetBundle bundle;
  for (const auto& [repr, family] : needed_datasets(config)) {
    if (!bundle.count(repr)) bundle.emplace(repr, load_dataset(config, repr, family));
  }
  return bundle;
}

// ---------------------------------------------------------------------------
// tuning

struct BestArtifact {
  int tier = 1;
  double objective = 0;
  TrialConfig config;

  nlohmann::json to_json() const {
    return {{"tier", tier}, {"objective", objective}, {"config", trial_config_to_json(config)}};
  }

  static BestArtifact from_json(const nlohmann::json& j) {
    BestArtifact out;
    out.tier = j.at("tier").get<int>();
    out.objective = j.at("objective").get<double>();
    out.config = trial_config_from_json(j.at("config"));
    return out;
  }
};

inline DatasetBundle bundle_subset(const DatasetBundle& bundle, const DateRange& range) {
  DatasetBundle out;
  for (const auto& [repr, m] : bundle) {
    std::vector<Date> keep;
    for (Date d : m.dates) {
      if (range.contains(d)) keep.push_back(d);
    }
    out.emplace(repr, subset_by_dates(m, keep));
  }
  return out;
}

// Mean validation accuracy of a whole stack over the rolling folds: each fold
// trains the stack (with its own inner out-of-fold plan) strictly on the
// fold's training range.
inline std::optional<double> stack_cv_accuracy(const StackSpec& spec, const DatasetBundle& bundle,
                                               const FoldPlan& plan, bool use_pca,
                                               std::uint64_t seed) {
  try {
    const auto mats = detail::stack_matrices(spec, bundle);
    const std::vector<Date> shared = common_dates(mats);
    const FeatureMatrix& meta_data = bundle_get(bundle, spec.meta_repr);
    const auto meta_index = detail::date_index(meta_data);
    double total = 0;
    for (std::size_t k = 0; k < plan.folds.size(); ++k) {
      const Fold& fold = plan.folds[k];
      const DatasetBundle sub = bundle_subset(bundle, fold.train);
      const FoldPlan inner = make_rolling_plan(fold.train.first, fold.train.last);
      const StackModel model = train_stack(spec, sub, inner, use_pca, derive_seed(seed, k));
      std::vector<Date> val_dates;
      std::vector<int> val_labels;
      for (Date d : shared) {
        if (fold.validation.contains(d)) {
          val_dates.push_back(d);
          val_labels.push_back(meta_data.labels[meta_index.at(d)]);
        }
      }
      if (val_dates.empty()) throw DataError("stack cv: empty validation fold");
      total += accuracy(predict_stack(model, bundle, val_dates), val_labels);
    }
    return total / plan.folds.size();
  } catch (const DataError&) {
    return std::nullopt;
  } catch (const NumericError&) {
    return std::nullopt;
  }
}

inline bool run_tune(const ExperimentConfig& config, bool force) {
  const Paths paths = paths_for(config);
  RunManifest want = base_manifest(config);
  for (const auto& [repr, family] : needed_datasets(config)) {
    const std::string stem = paths.dataset_stem(repr, family);
    want.inputs["datasets/" + stem + ".csv"] = hash_file(paths.dataset_csv(repr, family));
  }
  if (up_to_date(paths.tune_manifest(), want, force)) return false;
  fs::create_directories(paths.tune_dir());

  if (config.is_stack) {
    const DatasetBundle bundle = load_stack_bundle(config);
    const FeatureMatrix& meta_data = bundle_get(bundle, config.stack.meta_repr);
    const FoldPlan plan = make_fold_plan(meta_data.dates, config.fold);
    const SearchSpace space = default_search_space(config.stack.meta.family);
    const Objective objective = [&](const TrialConfig& trial,
                                    std::uint64_t seed) -> std::optional<double> {
      StackSpec spec = config.stack;
      spec.meta = spec_with_config(spec.meta, trial);
      return stack_cv_accuracy(spec, bundle, plan, config.use_pca, seed);
    };
    const SearchResult result = run_search(1, space, config.budgets.tier1, {},
                                           derive_seed(config.seed, fnv1a64("tune_stack")),
                                           objective);
    std::vector<LoggedTrial> log;
    for (std::size_t i = 0; i < result.history.size(); ++i) log.push_back({i, result.history[i]});
    csv::write_file(paths.trials_csv("stack"), trial_log_to_csv(log));
    BestArtifact best{1, result.best.objective, result.best.config};
    csv::write_file(paths.best_json("stack"), best.to_json().dump(2) + "\n");
  } else {
    for (Representation repr : config.representations) {
      const FeatureMatrix data = load_dataset(config, repr, date_family_for(config.model));
      const FoldPlan plan = make_fold_plan(data.dates, config.fold);
      const TierSpaces spaces =
          make_tier_spaces(default_search_space(config.model.family), data.names,
                           data.categories);
      CvContext ctx;
      ctx.data = &data;
      ctx.plan = plan;
      ctx.base_spec = config.model;
      ctx.use_pca = config.use_pca;
      ctx.jobs = config.jobs;
      const TierObjective objective = [&](int tier, const TrialConfig& trial,
                                          std::uint64_t seed) {
        return cv_accuracy(ctx, tier, trial, seed);
      };
      const std::string label = representation_name(repr);
      const TieredResult result =
          run_tiered_search(spaces, config.budgets,
                            derive_seed(config.seed, fnv1a64("tune_" + label)), objective,
                            config.max_tier);
      csv::write_file(paths.trials_csv(label), trial_log_to_csv(result.log));
      BestArtifact best{result.best.tier, result.best.objective, result.best.config};
      csv::write_file(paths.best_json(label), best.to_json().dump(2) + "\n");
    }
  }
  save_manifest(want, paths.tune_manifest());
  return true;
}

// ---------------------------------------------------------------------------
// final training

inline std::optional<BestArtifact> load_best(const ExperimentConfig& config,
                                             const std::string& label) {
  const fs::path p = paths_for(config).best_json(label);
  if (!fs::exists(p)) return std::nullopt;
  try {
    return BestArtifact::from_json(nlohmann::json::parse(read_text_file(p)));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("best artifact " + p.string() + ": " + e.what());
  }
}

struct ResolvedModel {
  ModelSpec spec;
  int tier = 1;
  TrialConfig trial;  // empty when untuned
};

inline ResolvedModel resolve_model(const ExperimentConfig& config, const std::string& label) {
  ResolvedModel out;
  out.spec = config.model;
  if (const auto best = load_best(config, label)) {
    out.spec = spec_with_config(config.model, best->config);
    out.tier = best->tier;
    out.trial = best->config;
  }
  return out;
}

inline bool run_train(const ExperimentConfig& config, bool force) {
  const Paths paths = paths_for(config);
  RunManifest want = base_manifest(config);
  for (const auto& [repr, family] : needed_datasets(config)) {
    const std::string stem = paths.dataset_stem(repr, family);
    want.inputs["datasets/" + stem + ".csv"] = hash_file(paths.dataset_csv(repr, family));
  }
  if (up_to_date(paths.model_manifest(), want, force)) return false;
  fs::create_directories(paths.model_dir());
  const DateRange train_span{config.fold.train_start, config.fold.last_validation_end()};

  if (config.is_stack) {
    StackSpec spec = config.stack;
    if (const auto best = load_best(config, "stack")) {
      spec.meta = spec_with_config(spec.meta, best->config);
    }
    const DatasetBundle bundle = load_stack_bundle(config);
    const DatasetBundle sub = bundle_subset(bundle, train_span);
    const FeatureMatrix& meta_data = bundle_get(sub, spec.meta_repr);
    const FoldPlan plan = make_fold_plan(meta_data.dates, config.fold);
    const StackModel model =
        train_stack(spec, sub, plan, config.use_pca, derive_seed(config.seed, fnv1a64("train")));
    csv::write_file(paths.model_json("stack"), model.to_json().dump() + "\n");
  } else {
    for (Representation repr : config.representations) {
      const std::string label = representation_name(repr);
      const FeatureMatrix data = load_dataset(config, repr, date_family_for(config.model));
      const ResolvedModel resolved = resolve_model(config, label);
      const std::vector<std::size_t> cols =
          resolved.trial.empty()
              ? [&] {
                  std::vector<std::size_t> all(data.names.size());
                  for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
                  return all;
                }()
              : enabled_features(resolved.trial, resolved.tier, data.names, data.categories);
      if (cols.empty()) throw ConfigError("train: tuned mask enables no features");
      const std::vector<std::size_t> rows = rows_in_range(data, train_span);
      if (rows.size() < 2) throw DataError("train: too few rows in training span");
      const Matrix Xtr = data.X.select_rows(rows).select_cols(cols);
      std::vector<int> ytr;
      for (std::size_t r : rows) ytr.push_back(data.labels[r]);
      const FittedScaler scaler =
          FittedScaler::fit(select_policy(resolved.spec, config.use_pca), Xtr);
      ModelSpec spec = resolved.spec;
      spec.seed = derive_seed(config.seed, fnv1a64("train_" + label));
      auto model = make_model(spec);
      model->fit(scaler.apply(Xtr), ytr);
      std::vector<std::string> col_names;
      for (std::size_t c : cols) col_names.push_back(data.names[c]);
      nlohmann::json j{{"spec", spec.to_json()},
                       {"scaler", scaler.to_json()},
                       {"model", model->to_json()},
                       {"columns", col_names},
                       {"trained_range", train_span.to_string()}};
      csv::write_file(paths.model_json(label), j.dump() + "\n");
    }
  }
  save_manifest(want, paths.model_manifest());
  return true;
}

// ---------------------------------------------------------------------------
// backtest

inline std::vector<double> forward_ratios(const AlignedPanel& panel, const std::string& target,
                                          const std::vector<Date>& dates) {
  const std::vector<double>& close = panel.column(target + "_close").values;
  std::map<Date, std::size_t> index;
  for (std::size_t t = 0; t < panel.dates.size(); ++t) index[panel.dates[t]] = t;
  std::vector<double> out;
  out.reserve(dates.size());
  for (Date d : dates) {
    const auto it = index.find(d);
    if (it == index.end() || it->second + 1 >= panel.dates.size()) {
      throw DataError("backtest: no next close for " + d.to_string());
    }
    out.push_back(close[it->second + 1] / close[it->second]);
  }
  return out;
}

inline nlohmann::json eval_record_to_json(const EvalRecord& r) {
  nlohmann::json dates = nlohmann::json::array();
  for (Date d : r.result.test_dates) dates.push_back(d.to_string());
  nlohmann::json months = nlohmann::json::array();
  for (const MonthResult& m : r.result.months) {
    months.push_back({{"year", m.year},
                      {"month", m.month},
                      {"days", m.days},
                      {"accuracy", m.accuracy},
                      {"profit_factor", m.profit_factor}});
  }
  return {{"model_label", r.model_label},
          {"dataset_label", r.dataset_label},
          {"use_pca", r.use_pca},
          {"protocol", protocol_name(r.result.protocol)},
          {"test_year", r.result.test_year},
          {"n_fits", r.result.n_fits},
          {"dates", dates},
          {"preds", r.result.preds},
          {"labels", r.result.labels},
          {"factors", r.result.curve.factors},
          {"values", r.result.curve.value},
          {"accuracy", r.result.accuracy_value},
          {"daily_returns", r.result.daily_returns},
          {"months", months}};
}

inline EvalRecord eval_record_from_json(const nlohmann::json& j) {
  EvalRecord r;
  r.model_label = j.at("model_label").get<std::string>();
  r.dataset_label = j.at("dataset_label").get<std::string>();
  r.use_pca = j.at("use_pca").get<bool>();
  r.result.protocol = parse_protocol(j.at("protocol").get<std::string>());
  r.result.test_year = j.at("test_year").get<int>();
  r.result.n_fits = j.at("n_fits").get<std::size_t>();
  for (const auto& d : j.at("dates")) r.result.test_dates.push_back(Date::parse(d));
  r.result.preds = j.at("preds").get<std::vector<int>>();
  r.result.labels = j.at("labels").get<std::vector<int>>();
  r.result.curve.factors = j.at("factors").get<std::vector<double>>();
  r.result.curve.value = j.at("values").get<std::vector<double>>();
  r.result.accuracy_value = j.at("accuracy").get<double>();
  r.result.daily_returns = j.at("daily_returns").get<std::vector<double>>();
  for (const auto& m : j.at("months")) {
    r.result.months.push_back({m.at("year").get<int>(), m.at("month").get<int>(),
                               m.at("days").get<std::size_t>(), m.at("accuracy").get<double>(),
                               m.at("profit_factor").get<double>()});
  }
  return r;
}

inline std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline std::vector<EvalRecord> run_backtest(const ExperimentConfig& config, bool force) {
  const Paths paths = paths_for(config);
  const fs::path out = paths.results_dir(config.fingerprint());
  RunManifest want = base_manifest(config);
  for (const auto& [repr, family] : needed_datasets(config)) {
    const std::string stem = paths.dataset_stem(repr, family);
    want.inputs["datasets/" + stem + ".csv"] = hash_file(paths.dataset_csv(repr, family));
  }
  const fs::path manifest_path = out / "backtest_manifest.json";
  const AlignedPanel panel = load_panel(paths.panel_csv(), paths.panel_meta());

  std::vector<EvalRecord> records;
  if (!up_to_date(manifest_path, want, force)) {
    fs::create_directories(out);
    if (config.is_stack) {
      StackSpec spec = config.stack;
      if (const auto best = load_best(config, "stack")) {
        spec.meta = spec_with_config(spec.meta, best->config);
      }
      const DatasetBundle bundle = load_stack_bundle(config);
      BacktestInput input;
      input.dates = common_dates(detail::stack_matrices(spec, bundle));
      const FeatureMatrix& meta_data = bundle_get(bundle, spec.meta_repr);
      const auto meta_index = detail::date_index(meta_data);
      for (Date d : input.dates) input.labels.push_back(meta_data.labels[meta_index.at(d)]);
      input.forward_ratio = forward_ratios(panel, config.target, input.dates);

      for (Protocol protocol : config.protocols) {
        std::size_t fit_counter = 0;
        const FitPredict fit = [&](const std::vector<Date>& train,
                                   const std::vector<Date>& test) {
          const DateRange span{train.front(), train.back()};
          const DatasetBundle sub = bundle_subset(bundle, span);
          const FoldPlan inner = make_rolling_plan(span.first, span.last);
          const StackModel model =
              train_stack(spec, sub, inner, config.use_pca,
                          derive_seed(config.seed, fit_counter++));
          return predict_stack(model, bundle, test);
        };
        EvalRecord record;
        record.model_label = "stack_" + lower(model_family_name(spec.meta.family));
        record.dataset_label = representation_name(spec.meta_repr);
        record.use_pca = config.use_pca;
        record.result = evaluate(input, protocol, config.test_year, fit);
        records.push_back(std::move(record));
      }
    } else {
      for (Representation repr : config.representations) {
        const std::string label = representation_name(repr);
        const FeatureMatrix data = load_dataset(config, repr, date_family_for(config.model));
        const ResolvedModel resolved = resolve_model(config, label);
        std::vector<std::size_t> cols;
        if (resolved.trial.empty()) {
          cols.resize(data.names.size());
          for (std::size_t j = 0; j < cols.size(); ++j) cols[j] = j;
        } else {
          cols = enabled_features(resolved.trial, resolved.tier, data.names, data.categories);
        }
        if (cols.empty()) throw ConfigError("backtest: tuned mask enables no features");
        const ScalingPolicy policy = select_policy(resolved.spec, config.use_pca);
        const auto index = detail::date_index(data);

        BacktestInput input;
        input.dates = data.dates;
        input.labels = data.labels;
        input.forward_ratio = forward_ratios(panel, config.target, data.dates);

        for (Protocol protocol : config.protocols) {
          std::size_t fit_counter = 0;
          const FitPredict fit = [&](const std::vector<Date>& train,
                                     const std::vector<Date>& test) {
            const auto tr = detail::rows_at(index, train);
            const auto te = detail::rows_at(index, test);
            const Matrix Xtr = data.X.select_rows(tr).select_cols(cols);
            const Matrix Xte = data.X.select_rows(te).select_cols(cols);
            std::vector<int> ytr;
            for (std::size_t r : tr) ytr.push_back(data.labels[r]);
            const FittedScaler scaler = FittedScaler::fit(policy, Xtr);
            ModelSpec spec = resolved.spec;
            spec.seed = derive_seed(config.seed, fit_counter++);
            auto model = make_model(spec);
            model->fit(scaler.apply(Xtr), ytr);
            return model->predict(scaler.apply(Xte));
          };
          EvalRecord record;
          record.model_label = lower(model_family_name(resolved.spec.family));
          record.dataset_label = label;
          record.use_pca = config.use_pca;
          record.result = evaluate(input, protocol, config.test_year, fit);
          records.push_back(std::move(record));
        }
      }
    }
    for (const EvalRecord& r : records) {
      csv::write_file(out / ("eval_" + r.config_label() + ".json"),
                      eval_record_to_json(r).dump() + "\n");
    }
    save_manifest(want, manifest_path);
  } else {
    for (const auto& entry : fs::directory_iterator(out)) {
      const std::string name = entry.path().filename().string();
      if (name.rfind("eval_", 0) == 0 && entry.path().extension() == ".json") {
        records.push_back(
            eval_record_from_json(nlohmann::json::parse(read_text_file(entry.path()))));
      }
    }
  }
  return records;
}

inline bool run_report(const ExperimentConfig& config, bool force) {
  const Paths paths = paths_for(config);
  const fs::path out = paths.results_dir(config.fingerprint());
  std::vector<fs::path> eval_files;
  if (fs::exists(out)) {
    for (const auto& entry : fs::directory_iterator(out)) {
      const std::string name = entry.path().filename().string();
      if (name.rfind("eval_", 0) == 0 && entry.path().extension() == ".json") {
        eval_files.push_back(entry.path());
      }
    }
  }
  if (eval_files.empty()) throw DataError("report: no evaluation records under " + out.string());
  std::sort(eval_files.begin(), eval_files.end());

  RunManifest want = base_manifest(config);
  for (const fs::path& p : eval_files) {
    want.inputs["results/" + p.filename().string()] = hash_file(p);
  }
  if (up_to_date(out / "manifest.json", want, force)) return false;

  std::vector<EvalRecord> records;
  for (const fs::path& p : eval_files) {
    records.push_back(eval_record_from_json(nlohmann::json::parse(read_text_file(p))));
  }
  emit_report(records, want, out);
  return true;
}

inline void run_full(const ExperimentConfig& config, bool force) {
  run_synth(config, force);
  run_ingest(config, force);
  run_build(config, force);
  run_tune(config, force);
  run_train(config, force);
  run_backtest(config, force);
  run_report(config, force);
}

}  // namespace fxlab::pipeline
