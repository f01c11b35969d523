#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fxlab/date.hpp"
#include "fxlab/errors.hpp"
#include "fxlab/features.hpp"
#include "fxlab/models.hpp"
#include "fxlab/preprocess.hpp"
#include "fxlab/rng.hpp"

namespace fxlab {

// ---------------------------------------------------------------------------
// Rolling fold plans

struct Fold {
  DateRange train;
  DateRange validation;
};

struct FoldPlan {
  std::vector<Fold> folds;
};

inline Date quarter_start(Date d) {
  const int m = ((d.month() - 1) / 3) * 3 + 1;
  return Date(d.year(), m, 1);
}

inline Date next_quarter_start(Date d) {
  const Date qs = quarter_start(d);
  if (qs.month() == 10) return Date(qs.year() + 1, 1, 1);
  return Date(qs.year(), qs.month() + 3, 1);
}

struct FoldPlanSpec {
  Date train_start{2013, 11, 26};
  Date train_end{2019, 12, 31};
  Date first_validation{2020, 1, 1};  // must be a quarter boundary
  int n_folds = 8;

  Date last_validation_end() const {
    Date qs = first_validation;
    for (int k = 1; k < n_folds; ++k) qs = next_quarter_start(qs);
    return next_quarter_start(qs).plus_days(-1);
  }
};

// Rolling protocol: a fixed base training span, then one fold per calendar
// quarter, each fold absorbing all earlier quarters into training.
inline FoldPlan make_fold_plan(const std::vector<Date>& dates, const FoldPlanSpec& spec = {}) {
  if (spec.n_folds < 1) throw ConfigError("fold plan: n_folds must be >= 1");
  if (quarter_start(spec.first_validation) != spec.first_validation) {
    throw ConfigError("fold plan: first validation date must start a quarter");
  }
  if (spec.train_end.plus_days(1) != spec.first_validation) {
    throw ConfigError("fold plan: training must end the day before validation starts");
  }
  if (dates.empty() || dates.front() > spec.train_start ||
      dates.back() < spec.last_validation_end()) {
    throw DataError("fold plan: data must cover " + spec.train_start.to_string() + ".." +
                    spec.last_validation_end().to_string());
  }
  FoldPlan plan;
  Date qs = spec.first_validation;
  for (int k = 0; k < spec.n_folds; ++k) {
    const Date qe = next_quarter_start(qs).plus_days(-1);
    plan.folds.push_back({{spec.train_start, qs.plus_days(-1)}, {qs, qe}});
    qs = next_quarter_start(qs);
  }
  return plan;
}

// Generic rolling plan over an arbitrary span: the first (ceil) half of its
// quarters seed training, each later quarter becomes one validation fold.
// Used for out-of-fold stacking inside a training window.
inline FoldPlan make_rolling_plan(Date first, Date last) {
  if (first > last) throw ConfigError("rolling plan: empty span");
  std::vector<DateRange> quarters;
  for (Date qs = quarter_start(first); qs <= last; qs = next_quarter_start(qs)) {
    const Date qe = next_quarter_start(qs).plus_days(-1);
    quarters.push_back({std::max(qs, first), std::min(qe, last)});
  }
  if (quarters.size() < 2) {
    throw DataError("rolling plan: span " + first.to_string() + ".." + last.to_string() +
                    " covers fewer than 2 quarters");
  }
  const std::size_t base = (quarters.size() + 1) / 2;
  FoldPlan plan;
  for (std::size_t i = base; i < quarters.size(); ++i) {
    plan.folds.push_back({{first, quarters[i].first.plus_days(-1)}, quarters[i]});
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Trials

using TrialConfig = std::map<std::string, HyperValue>;

inline nlohmann::json trial_config_to_json(const TrialConfig& config) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, value] : config) {
    std::visit([&](const auto& v) { j[name] = v; }, value);
  }
  return j;
}

inline TrialConfig trial_config_from_json(const nlohmann::json& j) {
  TrialConfig out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& v = it.value();
    if (v.is_boolean()) {
      out[it.key()] = v.get<bool>();
    } else if (v.is_number_integer() || v.is_number_unsigned()) {
      out[it.key()] = v.get<std::int64_t>();
    } else if (v.is_number_float()) {
      out[it.key()] = v.get<double>();
    } else {
      out[it.key()] = v.get<std::string>();
    }
  }
  return out;
}

struct Trial {
  std::size_t id = 0;
  int tier = 1;
  TrialConfig config;
  double objective = 0;
  bool ok = false;          // objective is meaningful
  bool transferred = false; // lifted from the previous tier, objective provisional
};

// Returns nullopt for a failed evaluation (e.g. empty feature mask).
using Objective = std::function<std::optional<double>(const TrialConfig&, std::uint64_t seed)>;

// ---------------------------------------------------------------------------
// Dimension sampling and density models

namespace detail {

inline double dim_to_working(const Dimension& d, double v) {
  return (d.kind == Dimension::Kind::REAL && d.log_scale) ? std::log(v) : v;
}

inline double dim_from_working(const Dimension& d, double w) {
  double v = (d.kind == Dimension::Kind::REAL && d.log_scale) ? std::exp(w) : w;
  v = std::clamp(v, d.lo, d.hi);
  if (d.kind == Dimension::Kind::INT) v = std::round(v);
  return std::clamp(v, d.lo, d.hi);
}

inline HyperValue sample_dim_uniform(const Dimension& d, Rng& rng) {
  switch (d.kind) {
    case Dimension::Kind::REAL: {
      if (d.log_scale) return std::exp(rng.uniform(std::log(d.lo), std::log(d.hi)));
      return rng.uniform(d.lo, d.hi);
    }
    case Dimension::Kind::INT:
      return rng.uniform_int(static_cast<std::int64_t>(d.lo), static_cast<std::int64_t>(d.hi));
    case Dimension::Kind::CATEGORICAL:
      return d.options[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(d.options.size()) - 1))];
    case Dimension::Kind::BOOLEAN: return rng.bernoulli(0.5);
  }
  throw ConfigError("unknown dimension kind");
}

inline double hyper_to_double(const HyperValue& v) {
  if (const double* d = std::get_if<double>(&v)) return *d;
  if (const std::int64_t* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  throw ConfigError("expected numeric hyperparameter");
}

// Gaussian KDE over observed values in the dimension's working scale, mixed
// with one uniform component over the domain. Two properties keep the
// proposal distribution from collapsing onto the incumbent: the uniform
// component preserves tail mass everywhere, and each kernel's bandwidth is
// its larger gap to the neighboring points, so sparse knowledge means wide
// kernels and only genuine convergence narrows them.
struct NumericKde {
  std::vector<double> points;  // working scale, ascending
  std::vector<double> bws;     // per-point bandwidths
  double wlo = 0, whi = 1;     // domain in the working scale

  static NumericKde build(const Dimension& d, const std::vector<double>& raw) {
    NumericKde kde;
    kde.wlo = dim_to_working(d, d.lo);
    kde.whi = dim_to_working(d, d.hi);
    for (double v : raw) kde.points.push_back(dim_to_working(d, v));
    std::sort(kde.points.begin(), kde.points.end());
    const double range = kde.whi - kde.wlo;
    const std::size_t n = kde.points.size();
    kde.bws.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double left = i > 0 ? kde.points[i] - kde.points[i - 1] : kde.points[i] - kde.wlo;
      const double right =
          i + 1 < n ? kde.points[i + 1] - kde.points[i] : kde.whi - kde.points[i];
      kde.bws[i] = std::clamp(std::max(left, right), 1e-2 * range, range);
    }
    return kde;
  }

  double log_density(double working) const {
    double acc = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double z = (working - points[i]) / bws[i];
      // sqrt(2*pi); each kernel carries unit mass
      acc += std::exp(-0.5 * z * z) / (bws[i] * 2.5066282746310002);
    }
    acc += 1.0 / (whi - wlo);  // the uniform prior component
    acc /= points.size() + 1;
    return std::log(std::max(acc, 1e-300));
  }

  double sample(const Dimension& d, Rng& rng) const {
    const auto n = static_cast<std::int64_t>(points.size());
    const std::int64_t i = rng.uniform_int(0, n);  // n kernels plus the prior
    if (i == n) return dim_from_working(d, rng.uniform(wlo, whi));
    const auto k = static_cast<std::size_t>(i);
    return dim_from_working(d, points[k] + bws[k] * rng.normal());
  }
};

// Laplace-smoothed category frequencies; booleans use options {false, true}.
struct CategoricalModel {
  std::vector<double> prob;

  static CategoricalModel build(std::size_t n_options, const std::vector<std::size_t>& picks) {
    CategoricalModel m;
    std::vector<std::size_t> cnt(n_options, 0);
    for (std::size_t p : picks) ++cnt[p];
    m.prob.resize(n_options);
    for (std::size_t i = 0; i < n_options; ++i) {
      m.prob[i] = (cnt[i] + 1.0) / (picks.size() + n_options);
    }
    return m;
  }

  double log_density(std::size_t option) const { return std::log(prob[option]); }

  std::size_t sample(Rng& rng) const {
    const double u = rng.uniform();
    double acc = 0;
    for (std::size_t i = 0; i < prob.size(); ++i) {
      acc += prob[i];
      if (u < acc) return i;
    }
    return prob.size() - 1;
  }
};

inline std::size_t option_index(const Dimension& d, const HyperValue& v) {
  if (d.kind == Dimension::Kind::BOOLEAN) return std::get<bool>(v) ? 1 : 0;
  const std::string& s = std::get<std::string>(v);
  for (std::size_t i = 0; i < d.options.size(); ++i) {
    if (d.options[i] == s) return i;
  }
  throw ConfigError("dimension " + d.name + ": unknown option " + s);
}

}  // namespace detail

inline TrialConfig sample_uniform_config(const SearchSpace& space, Rng& rng) {
  TrialConfig out;
  for (const Dimension& d : space.dims) out[d.name] = detail::sample_dim_uniform(d, rng);
  return out;
}

// Tree-structured Parzen proposal: model the top gamma fraction and the rest
// of the completed trials per dimension, then pick the candidate with the
// best good/bad density ratio. Falls back to uniform sampling with fewer
// than `min_history` completed trials or a flat objective landscape.
inline TrialConfig suggest(const std::vector<Trial>& history, const SearchSpace& space, Rng& rng,
                           double gamma = 0.25, int n_candidates = 24,
                           std::size_t min_history = 10) {
  std::vector<const Trial*> done;
  for (const Trial& t : history) {
    if (t.ok) done.push_back(&t);
  }
  if (done.size() < min_history) return sample_uniform_config(space, rng);

  double lo = done.front()->objective, hi = lo;
  for (const Trial* t : done) {
    lo = std::min(lo, t->objective);
    hi = std::max(hi, t->objective);
  }
  if (lo == hi) return sample_uniform_config(space, rng);

  std::vector<std::size_t> order(done.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return done[a]->objective > done[b]->objective;
  });
  const std::size_t n_good =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(gamma * done.size())));

  struct DimModel {
    bool numeric = true;
    detail::NumericKde good_kde, bad_kde;
    detail::CategoricalModel good_cat, bad_cat;
  };
  std::vector<DimModel> models(space.dims.size());
  for (std::size_t di = 0; di < space.dims.size(); ++di) {
    const Dimension& d = space.dims[di];
    DimModel& m = models[di];
    m.numeric = d.kind == Dimension::Kind::REAL || d.kind == Dimension::Kind::INT;
    if (m.numeric) {
      std::vector<double> good, bad;
      for (std::size_t i = 0; i < order.size(); ++i) {
        const double v = detail::hyper_to_double(done[order[i]]->config.at(d.name));
        (i < n_good ? good : bad).push_back(v);
      }
      if (bad.empty()) bad = good;
      m.good_kde = detail::NumericKde::build(d, good);
      m.bad_kde = detail::NumericKde::build(d, bad);
    } else {
      const std::size_t k =
          d.kind == Dimension::Kind::BOOLEAN ? 2 : d.options.size();
      std::vector<std::size_t> good, bad;
      for (std::size_t i = 0; i < order.size(); ++i) {
        const std::size_t v = detail::option_index(d, done[order[i]]->config.at(d.name));
        (i < n_good ? good : bad).push_back(v);
      }
      if (bad.empty()) bad = good;
      m.good_cat = detail::CategoricalModel::build(k, good);
      m.bad_cat = detail::CategoricalModel::build(k, bad);
    }
  }

  TrialConfig best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < n_candidates; ++c) {
    TrialConfig cand;
    double score = 0;
    for (std::size_t di = 0; di < space.dims.size(); ++di) {
      const Dimension& d = space.dims[di];
      const DimModel& m = models[di];
      if (m.numeric) {
        const double v = m.good_kde.sample(d, rng);
        const double w = detail::dim_to_working(d, v);
        score += m.good_kde.log_density(w) - m.bad_kde.log_density(w);
        if (d.kind == Dimension::Kind::INT) {
          cand[d.name] = static_cast<std::int64_t>(v);
        } else {
          cand[d.name] = v;
        }
      } else {
        const std::size_t v = m.good_cat.sample(rng);
        score += m.good_cat.log_density(v) - m.bad_cat.log_density(v);
        if (d.kind == Dimension::Kind::BOOLEAN) {
          cand[d.name] = v == 1;
        } else {
          cand[d.name] = d.options[v];
        }
      }
    }
    if (score > best_score) {
      best_score = score;
      best = std::move(cand);
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Single-tier search

class TpeSearch {
 public:
  TpeSearch(SearchSpace space, int tier, std::uint64_t seed)
      : space_(std::move(space)), tier_(tier), rng_(seed), seed_(seed) {}

  // Warm-start trials lifted from the previous tier; duplicates (by config)
  // are ignored so repeated transfer rounds stay idempotent.
  std::vector<Trial> add_warm(const std::vector<Trial>& warm) {
    std::vector<Trial> added;
    for (const Trial& t : warm) {
      const std::string key = trial_config_to_json(t.config).dump();
      if (!seen_.insert(key).second) continue;
      Trial copy = t;
      copy.tier = tier_;
      copy.transferred = true;
      copy.id = history_.size();
      history_.push_back(copy);
      added.push_back(copy);
    }
    return added;
  }

  Trial step(const Objective& objective) {
    TrialConfig config = suggest(history_, space_, rng_);
    seen_.insert(trial_config_to_json(config).dump());
    Trial t;
    t.id = history_.size();
    t.tier = tier_;
    t.config = std::move(config);
    const std::optional<double> obj =
        objective(t.config, derive_seed(seed_, static_cast<std::uint64_t>(eval_count_)));
    ++eval_count_;
    if (obj.has_value()) {
      t.ok = true;
      t.objective = *obj;
    }
    history_.push_back(t);
    return t;
  }

  const std::vector<Trial>& history() const { return history_; }
  const SearchSpace& space() const { return space_; }
  int tier() const { return tier_; }

  // Best ok trial, warm starts included; ties go to the earliest.
  Trial best() const {
    const Trial* out = nullptr;
    for (const Trial& t : history_) {
      if (t.ok && (out == nullptr || t.objective > out->objective)) out = &t;
    }
    if (out == nullptr) throw Error("search: all trials failed");
    return *out;
  }

 private:
  SearchSpace space_;
  int tier_;
  Rng rng_;
  std::uint64_t seed_;
  std::vector<Trial> history_;
  std::set<std::string> seen_;
  std::size_t eval_count_ = 0;
};

struct SearchResult {
  Trial best;
  std::vector<Trial> history;
};

inline SearchResult run_search(int tier, const SearchSpace& space, int budget,
                               const std::vector<Trial>& warm_start, std::uint64_t seed,
                               const Objective& objective) {
  if (budget < 1) throw ConfigError("run_search: budget must be >= 1");
  TpeSearch search(space, tier, seed);
  search.add_warm(warm_start);
  for (int i = 0; i < budget; ++i) search.step(objective);
  return {search.best(), search.history()};
}

// ---------------------------------------------------------------------------
// Tier spaces and knowledge transfer

inline std::string category_dim_name(const std::string& category) { return "cat:" + category; }
inline std::string feature_dim_name(const std::string& feature) { return "feat:" + feature; }

struct TierSpaces {
  SearchSpace tier1;  // hyperparameters only
  SearchSpace tier2;  // + one boolean per feature category
  SearchSpace tier3;  // + one boolean per individual feature
  std::vector<std::string> categories;      // sorted unique
  std::vector<std::string> feature_names;   // matrix column order
  std::vector<std::string> feature_cats;    // parallel to feature_names
};

inline TierSpaces make_tier_spaces(const SearchSpace& hyper,
                                   const std::vector<std::string>& feature_names,
                                   const std::vector<std::string>& feature_categories) {
  if (feature_names.size() != feature_categories.size()) {
    throw ConfigError("tier spaces: name/category size mismatch");
  }
  TierSpaces out;
  out.tier1 = hyper;
  out.feature_names = feature_names;
  out.feature_cats = feature_categories;
  std::set<std::string> cats(feature_categories.begin(), feature_categories.end());
  out.categories.assign(cats.begin(), cats.end());

  out.tier2 = out.tier1;
  for (const std::string& c : out.categories) {
    out.tier2.dims.push_back(Dimension::boolean(category_dim_name(c)));
  }
  out.tier3 = out.tier2;
  for (const std::string& f : feature_names) {
    out.tier3.dims.push_back(Dimension::boolean(feature_dim_name(f)));
  }
  return out;
}

// Active feature set under a trial config. Tier 2 gates whole categories;
// tier 3 additionally requires the per-feature bit, so a feature is active
// only when its category bit and its own bit are both set.
inline std::vector<std::size_t> enabled_features(const TrialConfig& config, int tier,
                                                 const std::vector<std::string>& names,
                                                 const std::vector<std::string>& cats) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < names.size(); ++j) {
    bool on = true;
    if (tier >= 2) {
      const auto it = config.find(category_dim_name(cats[j]));
      if (it != config.end()) on = std::get<bool>(it->second);
    }
    if (on && tier >= 3) {
      const auto it = config.find(feature_dim_name(names[j]));
      if (it != config.end()) on = std::get<bool>(it->second);
    }
    if (on) out.push_back(j);
  }
  return out;
}

// Lifts a parent tier's top-q trials into the child space. Shared dimensions
// copy over; a new category boolean defaults to true; a new feature boolean
// inherits its category's bit so a tier-2 mask expands feature-exactly.
inline std::vector<Trial> transfer(const std::vector<Trial>& parent_history,
                                   const SearchSpace& child_space,
                                   const std::vector<std::string>& feature_names,
                                   const std::vector<std::string>& feature_cats,
                                   std::size_t q = 10) {
  std::map<std::string, std::string> cat_of;  // feature dim name -> category dim name
  for (std::size_t j = 0; j < feature_names.size(); ++j) {
    cat_of[feature_dim_name(feature_names[j])] = category_dim_name(feature_cats[j]);
  }

  std::vector<const Trial*> done;
  for (const Trial& t : parent_history) {
    if (t.ok) done.push_back(&t);
  }
  std::stable_sort(done.begin(), done.end(),
                   [](const Trial* a, const Trial* b) { return a->objective > b->objective; });
  if (done.size() > q) done.resize(q);

  std::vector<Trial> out;
  for (const Trial* p : done) {
    Trial lifted;
    lifted.config = p->config;  // shared dimensions (child space is a superset)
    lifted.objective = p->objective;
    lifted.ok = true;
    lifted.transferred = true;
    for (const Dimension& d : child_space.dims) {
      if (lifted.config.count(d.name)) continue;
      const auto cat = cat_of.find(d.name);
      if (cat != cat_of.end() && lifted.config.count(cat->second)) {
        lifted.config[d.name] = std::get<bool>(lifted.config.at(cat->second));
      } else {
        lifted.config[d.name] = true;
      }
    }
    out.push_back(std::move(lifted));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tiered orchestration with periodic 1->2->3 transfer

struct TierBudgets {
  int tier1 = 100;
  int tier2 = 200;
  int tier3 = 300;
};

struct LoggedTrial {
  std::size_t trial_id = 0;
  Trial trial;
};

struct TieredResult {
  std::vector<LoggedTrial> log;  // evaluation and transfer events in order
  Trial best;                    // argmax over evaluated (non-transferred) trials
};

// The objective receives the tier so it can interpret mask dimensions.
using TierObjective =
    std::function<std::optional<double>(int tier, const TrialConfig&, std::uint64_t seed)>;

inline TieredResult run_tiered_search(const TierSpaces& spaces, const TierBudgets& budgets,
                                      std::uint64_t seed, const TierObjective& objective,
                                      int max_tier = 3, int transfer_every = 25,
                                      std::size_t transfer_q = 10) {
  if (max_tier < 1 || max_tier > 3) throw ConfigError("tiered search: max_tier in 1..3");
  if (budgets.tier1 < 1 || (max_tier >= 2 && budgets.tier2 < 1) ||
      (max_tier >= 3 && budgets.tier3 < 1)) {
    throw ConfigError("tiered search: budgets must be >= 1");
  }
  TpeSearch s1(spaces.tier1, 1, derive_seed(seed, 1));
  TpeSearch s2(spaces.tier2, 2, derive_seed(seed, 2));
  TpeSearch s3(spaces.tier3, 3, derive_seed(seed, 3));

  TieredResult result;
  std::size_t next_id = 0;
  auto log_trial = [&](const Trial& t) { result.log.push_back({next_id++, t}); };

  auto run_chunk = [&](TpeSearch& s, int tier, int& remaining) {
    const int n = std::min(transfer_every, remaining);
    for (int i = 0; i < n; ++i) {
      log_trial(s.step([&](const TrialConfig& c, std::uint64_t trial_seed) {
        return objective(tier, c, trial_seed);
      }));
    }
    remaining -= n;
  };
  auto do_transfer = [&](const TpeSearch& from, TpeSearch& to) {
    const auto lifted = transfer(from.history(), to.space(), spaces.feature_names,
                                 spaces.feature_cats, transfer_q);
    for (const Trial& t : to.add_warm(lifted)) log_trial(t);
  };

  int rem1 = budgets.tier1;
  int rem2 = max_tier >= 2 ? budgets.tier2 : 0;
  int rem3 = max_tier >= 3 ? budgets.tier3 : 0;
  while (rem1 > 0 || rem2 > 0 || rem3 > 0) {
    if (rem1 > 0) run_chunk(s1, 1, rem1);
    if (max_tier >= 2) do_transfer(s1, s2);
    if (rem2 > 0) run_chunk(s2, 2, rem2);
    if (max_tier >= 3) do_transfer(s2, s3);
    if (rem3 > 0) run_chunk(s3, 3, rem3);
  }
  if (max_tier >= 2) do_transfer(s1, s2);
  if (max_tier >= 3) do_transfer(s2, s3);

  // Global best across tiers, evaluated trials only; earliest wins ties.
  const Trial* best = nullptr;
  for (const LoggedTrial& lt : result.log) {
    if (lt.trial.ok && !lt.trial.transferred &&
        (best == nullptr || lt.trial.objective > best->objective)) {
      best = &lt.trial;
    }
  }
  if (best == nullptr) throw Error("tiered search: all trials failed");
  result.best = *best;
  return result;
}

// Append-only audit log: trial_id, tier, objective, status, config_json.
// The config JSON is the final column and may itself contain commas.
inline std::string trial_log_to_csv(const std::vector<LoggedTrial>& log) {
  std::string out = "trial_id,tier,objective,status,config_json\n";
  for (const LoggedTrial& lt : log) {
    const Trial& t = lt.trial;
    out += std::to_string(lt.trial_id) + "," + std::to_string(t.tier) + ",";
    if (t.ok) out += csv::format_double(t.objective);
    out += ",";
    out += t.transferred ? "transferred" : (t.ok ? "ok" : "failed");
    out += "," + trial_config_to_json(t.config).dump() + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cross-validated accuracy objective

struct CvContext {
  const FeatureMatrix* data = nullptr;
  FoldPlan plan;
  ModelSpec base_spec;
  bool use_pca = false;
  int jobs = 1;
};

inline double accuracy(const std::vector<int>& preds, const std::vector<int>& labels) {
  if (preds.size() != labels.size() || preds.empty()) {
    throw ValidationError("accuracy: size mismatch or empty");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == labels[i];
  return static_cast<double>(hits) / preds.size();
}

inline std::vector<std::size_t> rows_in_range(const FeatureMatrix& m, const DateRange& range) {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < m.dates.size(); ++r) {
    if (range.contains(m.dates[r])) out.push_back(r);
  }
  return out;
}

inline ModelSpec spec_with_config(const ModelSpec& base, const TrialConfig& config) {
  ModelSpec spec = base;
  for (const auto& [name, value] : config) {
    if (name.rfind("cat:", 0) == 0 || name.rfind("feat:", 0) == 0) continue;
    spec.hyper[name] = value;
  }
  return spec;
}

// Mean validation accuracy over the rolling folds; scaling (and PCA when
// enabled) refits on each fold's training rows. Returns nullopt when the
// mask empties the feature set or a fold cannot be fit.
inline std::optional<double> cv_accuracy(const CvContext& ctx, int tier,
                                         const TrialConfig& config, std::uint64_t seed) {
  const FeatureMatrix& data = *ctx.data;
  const std::vector<std::size_t> cols =
      enabled_features(config, tier, data.names, data.categories);
  if (cols.empty()) return std::nullopt;
  const ModelSpec spec = spec_with_config(ctx.base_spec, config);
  const ScalingPolicy policy = select_policy(spec, ctx.use_pca);

  auto eval_fold = [&](std::size_t k) -> double {
    const Fold& fold = ctx.plan.folds[k];
    const auto train_rows = rows_in_range(data, fold.train);
    const auto val_rows = rows_in_range(data, fold.validation);
    if (train_rows.size() < 2 || val_rows.empty()) {
      throw DataError("fold " + std::to_string(k + 1) + ": empty training or validation rows");
    }
    const Matrix Xtr = data.X.select_rows(train_rows).select_cols(cols);
    const Matrix Xva = data.X.select_rows(val_rows).select_cols(cols);
    std::vector<int> ytr(train_rows.size()), yva(val_rows.size());
    for (std::size_t i = 0; i < train_rows.size(); ++i) ytr[i] = data.labels[train_rows[i]];
    for (std::size_t i = 0; i < val_rows.size(); ++i) yva[i] = data.labels[val_rows[i]];

    const FittedScaler scaler = FittedScaler::fit(policy, Xtr);
    ModelSpec fold_spec = spec;
    fold_spec.seed = derive_seed(seed, k);
    auto model = make_model(fold_spec);
    model->fit(scaler.apply(Xtr), ytr);
    return accuracy(model->predict(scaler.apply(Xva)), yva);
  };

  try {
    const std::size_t n = ctx.plan.folds.size();
    std::vector<double> accs(n);
    if (ctx.jobs > 1) {
      std::vector<std::future<double>> futures;
      for (std::size_t k = 0; k < n; ++k) {
        futures.push_back(std::async(std::launch::async, eval_fold, k));
      }
      for (std::size_t k = 0; k < n; ++k) accs[k] = futures[k].get();
    } else {
      for (std::size_t k = 0; k < n; ++k) accs[k] = eval_fold(k);
    }
    double mean = 0;
    for (double a : accs) mean += a;
    return mean / n;
  } catch (const DataError&) {
    return std::nullopt;
  } catch (const NumericError&) {
    return std::nullopt;
  }
}

}  // namespace fxlab
