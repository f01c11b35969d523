// Acceptance gate for the workbench: eleven criteria, one PASS/FAIL line
// each, nonzero exit if any fails. Every numeric bar is pinned here, not
// derived at runtime, so a regression cannot silently loosen a tolerance.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fxlab/backtest.hpp"
#include "fxlab/config.hpp"
#include "fxlab/features.hpp"
#include "fxlab/indicators.hpp"
#include "fxlab/manifest.hpp"
#include "fxlab/market_data.hpp"
#include "fxlab/models.hpp"
#include "fxlab/pipeline.hpp"
#include "fxlab/preprocess.hpp"
#include "fxlab/report.hpp"
#include "fxlab/stacking.hpp"
#include "fxlab/synth.hpp"
#include "fxlab/tuning.hpp"
#include "oracles.hpp"

using namespace fxlab;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string str(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

struct TempDir {
  fs::path path;

  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() /
           ("fxlab_accept_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

Matrix take_rows(const Matrix& X, const std::vector<std::size_t>& rows) {
  Matrix out(rows.size(), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < X.cols(); ++j) out(i, j) = X(rows[i], j);
  }
  return out;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// ---------------------------------------------------------------------------
// Shared planted-signal fixture (criteria 7 and 9). Two instruments and two
// calendars keep the build fast while exercising every feature source.

struct PlantedFixture {
  AlignedPanel panel;
  FeatureMatrix d1, d2, d3;
};

const PlantedFixture& planted_fixture() {
  static const PlantedFixture fx = [] {
    SynthConfig sc;
    sc.start = Date(2018, 1, 1);
    sc.end = Date(2021, 12, 31);
    sc.instruments = {"EURUSD", "DAX"};
    sc.indicators = {"USA_PMI", "EA_CAB"};
    sc.planted.enabled = true;  // 3-day momentum, 15% label noise

    const auto dates = weekday_dates(sc.start, sc.end);
    std::vector<OhlcvSeries> series;
    for (const auto& id : sc.instruments) {
      series.push_back(synth_ohlcv(id, dates, derive_seed(7, fnv1a64(id)), &sc.planted));
    }
    std::vector<EconomicCalendar> cals;
    for (const auto& id : sc.indicators) {
      cals.push_back(synth_calendar(id, sc.start, sc.end, derive_seed(7, fnv1a64(id))));
    }

    PlantedFixture out;
    out.panel = build_panel(series, cals, "EURUSD");
    const TransformLedger ledger = fit_transforms(out.panel, Date(2020, 12, 31));
    out.panel = apply_transforms(out.panel, ledger);

    DatasetBuildConfig c;
    c.date_family = DateFamily::TREE;
    c.repr = Representation::D1;
    out.d1 = build_dataset(out.panel, c);
    c.repr = Representation::D2;
    c.lag_depth = 90;
    out.d2 = build_dataset(out.panel, c);
    c.repr = Representation::D3;
    out.d3 = build_dataset(out.panel, c);
    return out;
  }();
  return fx;
}

// ---------------------------------------------------------------------------
// 1. Every catalog indicator matches an independent brute-force oracle on a
//    hundred synthetic walks, within 1e-9 at every defined index.

std::string criterion_indicator_oracle() {
  const auto t0 = Clock::now();
  const auto catalog = indicator_catalog();
  if (catalog.size() != 92) {
    return "catalog has " + std::to_string(catalog.size()) + " specs, expected 92";
  }
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto f = oracle::random_walk(seed, 500);
    for (const IndicatorSpec& spec : catalog) {
      const std::size_t warm = indicator_warm_up(spec);
      const auto lib = compute_indicator_values(spec, f.high, f.low, f.close, f.volume);
      const auto ref = oracle::evaluate(spec, f.high, f.low, f.close, f.volume);
      if (lib.size() != 500 || ref.size() != 500) return spec.name("X") + ": bad length";
      for (std::size_t t = 0; t < 500; ++t) {
        const bool lib_def = !std::isnan(lib[t]);
        const bool ref_def = !std::isnan(ref[t]);
        const bool expect_def = t >= warm;
        if (lib_def != expect_def || ref_def != expect_def) {
          return spec.name("X") + " seed " + std::to_string(seed) + " index " +
                 std::to_string(t) + ": definedness mismatch";
        }
        if (lib_def && std::abs(lib[t] - ref[t]) > 1e-9) {
          return spec.name("X") + " seed " + std::to_string(seed) + " index " +
                 std::to_string(t) + ": |" + str(lib[t]) + " - " + str(ref[t]) + "| > 1e-9";
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  if (secs >= 60.0) return "took " + str(secs) + "s, budget 60s";
  return "";
}

// ---------------------------------------------------------------------------
// 2. Full-rank PCA: decorrelated output, preserved dimension, eigenvalue sum
//    equal to the covariance trace, and an exact round trip.

std::string criterion_pca() {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> n01(0.0, 1.0);
  const std::size_t rows = 240, cols = 16;
  Matrix X(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const double shared = n01(gen);  // cross-column correlation to decorrelate
    for (std::size_t j = 0; j < cols; ++j) {
      X(i, j) = (1.0 + static_cast<double>(j) / 8.0) * n01(gen) + 0.6 * shared;
    }
  }

  const PcaTransform pca = PcaTransform::fit(X);
  if (pca.components.rows() != cols || pca.components.cols() != cols) {
    return "components are " + std::to_string(pca.components.rows()) + "x" +
           std::to_string(pca.components.cols()) + ", expected 16x16";
  }
  if (pca.eigenvalues.size() != cols) return "eigenvalue count != 16";

  const Matrix T = pca.apply(X);
  if (T.rows() != rows || T.cols() != cols) return "transform changed the shape";

  // Population covariance of the transformed data.
  std::vector<double> mean(cols, 0.0);
  for (std::size_t j = 0; j < cols; ++j) {
    for (std::size_t i = 0; i < rows; ++i) mean[j] += T(i, j);
    mean[j] /= static_cast<double>(rows);
  }
  for (std::size_t a = 0; a < cols; ++a) {
    for (std::size_t b = a + 1; b < cols; ++b) {
      double cov = 0;
      for (std::size_t i = 0; i < rows; ++i) cov += (T(i, a) - mean[a]) * (T(i, b) - mean[b]);
      cov /= static_cast<double>(rows);
      if (std::abs(cov) >= 1e-8) {
        return "transformed covariance (" + std::to_string(a) + "," + std::to_string(b) +
               ") = " + str(cov) + ", bar 1e-8";
      }
    }
  }

  double trace = 0;
  for (std::size_t j = 0; j < cols; ++j) {
    double m = 0;
    for (std::size_t i = 0; i < rows; ++i) m += X(i, j);
    m /= static_cast<double>(rows);
    double var = 0;
    for (std::size_t i = 0; i < rows; ++i) var += (X(i, j) - m) * (X(i, j) - m);
    trace += var / static_cast<double>(rows);
  }
  double eigen_sum = 0;
  for (double e : pca.eigenvalues) eigen_sum += e;
  if (std::abs(eigen_sum - trace) >= 1e-8) {
    return "eigenvalue sum " + str(eigen_sum) + " vs trace " + str(trace) + ", bar 1e-8";
  }

  const Matrix back = pca.inverse_apply(T);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      if (std::abs(back(i, j) - X(i, j)) >= 1e-8) {
        return "round-trip error " + str(std::abs(back(i, j) - X(i, j))) + " at (" +
               std::to_string(i) + "," + std::to_string(j) + "), bar 1e-8";
      }
    }
  }
  return "";
}

// ---------------------------------------------------------------------------
// 3. Profit arithmetic: the worked example, flip reciprocity on a thousand
//    random fixtures, and exact monthly decomposition of the walk-forward.

std::string criterion_profit() {
  {
    const ProfitCurve c = profit_curve({1, 0}, {1.0, 1.1, 1.0});
    if (std::abs(c.final_value() - 1.21) >= 1e-12) {
      return "hand case final " + str(c.final_value()) + ", expected 1.21 within 1e-12";
    }
    if (c.factors.size() != 2 || std::abs(c.factors[0] - 1.1) >= 1e-12 ||
        std::abs(c.factors[1] - 1.1) >= 1e-12) {
      return "hand case factors off";
    }
  }

  std::mt19937_64 gen(17);
  std::normal_distribution<double> step(0.0, 0.02);
  std::bernoulli_distribution coin(0.5);
  for (int k = 0; k < 1000; ++k) {
    const std::size_t len = 1 + static_cast<std::size_t>(k % 12);
    std::vector<double> closes(len + 1);
    closes[0] = 1.0 + 0.001 * k;
    for (std::size_t i = 1; i <= len; ++i) closes[i] = closes[i - 1] * std::exp(step(gen));
    std::vector<int> preds(len), flipped(len);
    for (std::size_t i = 0; i < len; ++i) {
      preds[i] = coin(gen) ? 1 : 0;
      flipped[i] = 1 - preds[i];
    }
    const double p = profit_curve(preds, closes).final_value();
    const double q = profit_curve(flipped, closes).final_value();
    if (std::abs(p * q - 1.0) >= 1e-9) {
      return "fixture " + std::to_string(k) + ": P*P_flip = " + str(p * q) +
             ", expected 1 within 1e-9";
    }
  }

  // Walk-forward on two years of weekdays; monthly factors must multiply back
  // to the final value exactly, under both protocols.
  const auto dates = weekday_dates(Date(2020, 1, 1), Date(2021, 12, 31));
  BacktestInput input;
  input.dates = dates;
  std::mt19937_64 rgen(29);
  std::normal_distribution<double> rstep(0.0, 0.01);
  for (std::size_t i = 0; i < dates.size(); ++i) {
    const double ratio = std::exp(rstep(rgen));
    input.forward_ratio.push_back(ratio);
    input.labels.push_back(ratio > 1.0 ? 1 : 0);
  }
  const FitPredict fp = [](const std::vector<Date>&, const std::vector<Date>& test) {
    std::vector<int> out;
    out.reserve(test.size());
    for (Date d : test) out.push_back((d.day() + d.month()) % 2);
    return out;
  };
  for (const Protocol proto : {Protocol::ANNUAL, Protocol::MONTHLY_RETRAIN}) {
    const EvalResult res = evaluate(input, proto, 2021, fp);
    if (res.months.size() != 12) return "expected 12 months in the decomposition";
    double prod = 1.0;
    std::size_t days = 0;
    for (const MonthResult& m : res.months) {
      prod *= m.profit_factor;
      days += m.days;
    }
    if (days != res.test_dates.size()) return "monthly day counts do not cover the test year";
    if (std::abs(prod - res.curve.final_value()) >= 1e-12) {
      return std::string(protocol_name(proto)) + ": monthly product " + str(prod) +
             " vs final " + str(res.curve.final_value()) + ", bar 1e-12";
    }
  }
  return "";
}

// ---------------------------------------------------------------------------
// 4. The default fold plan: eight quarterly validation folds over 2020-2021
//    with strictly nested training ranges anchored at 2013-11-26.

std::string criterion_fold_plan() {
  const auto dates = weekday_dates(Date(2013, 11, 20), Date(2021, 12, 31));
  const FoldPlan plan = make_fold_plan(dates);
  if (plan.folds.size() != 8) {
    return "plan has " + std::to_string(plan.folds.size()) + " folds, expected 8";
  }
  Date qs(2020, 1, 1);
  for (std::size_t k = 0; k < 8; ++k) {
    const Fold& f = plan.folds[k];
    const Date qe = next_quarter_start(qs).plus_days(-1);
    if (f.validation.first != qs || f.validation.last != qe) {
      return "fold " + std::to_string(k) + " validates " + f.validation.to_string() +
             ", expected " + qs.to_string() + ".." + qe.to_string();
    }
    if (f.train.first != Date(2013, 11, 26)) {
      return "fold " + std::to_string(k) + " training starts " + f.train.first.to_string();
    }
    if (f.train.last.plus_days(1) != f.validation.first) {
      return "fold " + std::to_string(k) + " has a gap between training and validation";
    }
    if (k > 0 && f.train.last != plan.folds[k - 1].validation.last) {
      return "fold " + std::to_string(k) + " does not absorb the previous validation quarter";
    }
    qs = next_quarter_start(qs);
  }
  if (plan.folds[0].train.last != Date(2019, 12, 31)) {
    return "fold 0 training ends " + plan.folds[0].train.last.to_string() +
           ", expected 2019-12-31";
  }
  return "";
}

// ---------------------------------------------------------------------------
// 5. Model sanity: analytic logistic gradient, exact-fit nearest neighbor and
//    unlimited tree, monotone boosting loss, and histogram/exact agreement.

std::string criterion_model_sanity() {
  // Logistic gradient vs central differences, fifty random probes.
  std::mt19937_64 gen(41);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  const double l2s[3] = {0.0, 0.01, 0.1};
  for (int probe = 0; probe < 50; ++probe) {
    const std::size_t n = 8 + static_cast<std::size_t>(probe % 5) * 8;
    const std::size_t f = 2 + static_cast<std::size_t>(probe % 6);
    Matrix X(n, f);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < f; ++j) X(i, j) = n01(gen);
      y[i] = coin(gen) ? 1 : 0;
    }
    std::vector<double> w(f + 1);
    for (auto& v : w) v = n01(gen);
    const double l2 = l2s[probe % 3];
    const auto [loss, grad] = logistic_loss_and_gradient(X, y, w, l2);
    (void)loss;
    const double h = 1e-6;
    for (std::size_t j = 0; j < w.size(); ++j) {
      std::vector<double> wp = w, wm = w;
      wp[j] += h;
      wm[j] -= h;
      const double lp = logistic_loss_and_gradient(X, y, wp, l2).first;
      const double lm = logistic_loss_and_gradient(X, y, wm, l2).first;
      const double numeric = (lp - lm) / (2 * h);
      const double rel =
          std::abs(grad[j] - numeric) / std::max({std::abs(grad[j]), std::abs(numeric), 1e-8});
      if (rel >= 1e-4) {
        return "gradient probe " + std::to_string(probe) + " component " + std::to_string(j) +
               ": rel err " + str(rel) + ", bar 1e-4";
      }
    }
  }

  // Conflict-free fixture: distinct rows, arbitrary labels.
  const auto consistent = [](std::size_t n, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 g(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::bernoulli_distribution c(0.5);
    Matrix X(n, cols);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < cols; ++j) X(i, j) = u(g);
      X(i, 0) += static_cast<double>(i);  // guarantees row uniqueness
      y[i] = c(g) ? 1 : 0;
    }
    return std::make_pair(X, y);
  };
  const auto exact_fit = [](Model& m, const Matrix& X, const std::vector<int>& y) {
    const auto preds = m.predict(X);
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (preds[i] != y[i]) return false;
    }
    return true;
  };

  {
    const auto [X, y] = consistent(40, 3, 43);
    ModelSpec spec;
    spec.family = ModelFamily::KNN;
    spec.hyper = {{"k", std::int64_t{1}}};
    spec.seed = 1;
    auto m = make_model(spec);
    m->fit(X, y);
    if (!exact_fit(*m, X, y)) return "1-NN failed to reproduce its training labels";
  }
  {
    const auto [X, y] = consistent(80, 5, 47);
    ModelSpec spec;
    spec.family = ModelFamily::TREE;  // unlimited depth by default
    spec.seed = 1;
    auto m = make_model(spec);
    m->fit(X, y);
    if (!exact_fit(*m, X, y)) return "unlimited tree failed to shatter consistent data";
  }

  // Separable blobs for the boosting checks.
  Matrix Xb(60, 2);
  std::vector<int> yb(60);
  {
    std::mt19937_64 g(53);
    std::normal_distribution<double> noise(0.0, 0.3);
    for (std::size_t i = 0; i < 60; ++i) {
      const int label = static_cast<int>(i % 2);
      const double cx = label ? 2.0 : -1.0;
      Xb(i, 0) = cx + noise(g);
      Xb(i, 1) = cx + noise(g);
      yb[i] = label;
    }
  }
  for (const BoostMode mode : {BoostMode::EXACT, BoostMode::HIST, BoostMode::NEWTON}) {
    ModelSpec spec;
    spec.family = ModelFamily::GRAD_BOOST;
    spec.hyper = {{"n_stages", std::int64_t{40}}, {"shrinkage", 0.3}};
    spec.seed = 1;
    BoostModel model(spec, mode);
    model.fit(Xb, yb);
    const auto& losses = model.training_losses();
    if (losses.size() < 2) return "boosting recorded too few losses";
    for (std::size_t i = 1; i < losses.size(); ++i) {
      if (!(losses[i] <= losses[i - 1] + 1e-12)) {
        return "boosting loss rose at stage " + std::to_string(i) + ": " + str(losses[i - 1]) +
               " -> " + str(losses[i]);
      }
    }
  }

  // Features on a 7-point grid: 64 bins exceed the distinct values, so the
  // histogram split search must reduce to the exact one.
  {
    std::mt19937_64 g(31);
    std::uniform_int_distribution<int> grid(0, 6);
    std::bernoulli_distribution c(0.5);
    Matrix X(50, 3);
    std::vector<int> y(50);
    for (std::size_t i = 0; i < 50; ++i) {
      for (std::size_t j = 0; j < 3; ++j) X(i, j) = 0.5 * grid(g);
      y[i] = c(g) ? 1 : 0;
    }
    ModelSpec spec;
    spec.family = ModelFamily::GRAD_BOOST;
    spec.hyper = {{"n_stages", std::int64_t{25}},
                  {"shrinkage", 0.3},
                  {"max_depth", std::int64_t{3}},
                  {"bins", std::int64_t{64}}};
    spec.seed = 1;
    BoostModel exact(spec, BoostMode::EXACT);
    BoostModel hist(spec, BoostMode::HIST);
    exact.fit(X, y);
    hist.fit(X, y);
    const auto se = exact.decision_scores(X);
    const auto sh = hist.decision_scores(X);
    for (std::size_t i = 0; i < se.size(); ++i) {
      if (se[i] != sh[i]) {
        return "histogram and exact boosting disagree at row " + std::to_string(i) + ": " +
               str(se[i]) + " vs " + str(sh[i]);
      }
    }
  }
  return "";
}

// ---------------------------------------------------------------------------
// 6. Leakage nulls: shuffled labels pin cross-validated accuracy to chance,
//    and perturbing the panel after a date never changes earlier feature rows.

std::string criterion_leakage() {
  // Null accuracy. Features predict the original labels; shuffling breaks the
  // relation, so any residual skill would have to come from leakage.
  const auto dates = weekday_dates(Date(2013, 11, 20), Date(2021, 12, 31));
  FeatureMatrix base;
  base.repr = Representation::D1;
  base.date_family = DateFamily::CONTINUOUS;
  base.dates = dates;
  const std::size_t n = dates.size();
  base.X = Matrix(n, 6);
  std::mt19937_64 gen(99);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < 6; ++j) base.X(i, j) = n01(gen);
  }
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = base.X(i, 0) > 0 ? 1 : 0;
  for (int j = 0; j < 6; ++j) {
    base.names.push_back("f" + std::to_string(j));
    base.categories.push_back("noise");
  }

  const FoldPlan plan = make_fold_plan(base.dates);
  ModelSpec logistic;
  logistic.family = ModelFamily::LOGISTIC;

  double sum = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    FeatureMatrix m = base;
    m.labels = labels;
    Rng rng(derive_seed(4242, s));
    rng.shuffle(m.labels);
    CvContext ctx;
    ctx.data = &m;
    ctx.plan = plan;
    ctx.base_spec = logistic;
    ctx.jobs = 4;
    const auto acc = cv_accuracy(ctx, 1, {}, derive_seed(31, s));
    if (!acc) return "cross-validation failed on shuffle seed " + std::to_string(s);
    sum += *acc;
  }
  const double mean = sum / 20.0;
  if (mean < 0.45 || mean > 0.55) {
    return "null mean accuracy " + str(mean) + " outside [0.45, 0.55]";
  }

  // Future-perturbation probe: bump every bar after the cut and rebuild.
  SynthConfig sc;
  sc.start = Date(2019, 1, 1);
  sc.end = Date(2020, 12, 31);
  sc.instruments = {"EURUSD", "DAX"};
  sc.indicators = {"USA_PMI", "EA_CAB"};
  const auto span = weekday_dates(sc.start, sc.end);
  std::vector<OhlcvSeries> series;
  for (const auto& id : sc.instruments) {
    series.push_back(synth_ohlcv(id, span, derive_seed(5, fnv1a64(id)), nullptr));
  }
  std::vector<EconomicCalendar> cals;
  for (const auto& id : sc.indicators) {
    cals.push_back(synth_calendar(id, sc.start, sc.end, derive_seed(5, fnv1a64(id))));
  }
  const Date cut(2020, 3, 31);

  const auto build = [&](const std::vector<OhlcvSeries>& s) {
    AlignedPanel panel = build_panel(s, cals, "EURUSD");
    const TransformLedger ledger = fit_transforms(panel, cut);
    panel = apply_transforms(panel, ledger);
    DatasetBuildConfig c;
    c.repr = Representation::D2;
    c.date_family = DateFamily::CONTINUOUS;
    c.lag_depth = 30;
    return build_dataset(panel, c);
  };
  const FeatureMatrix before = build(series);

  std::vector<OhlcvSeries> bumped = series;
  for (OhlcvSeries& s : bumped) {
    for (auto& bar : s.bars) {
      if (bar.date > cut) {
        bar.open *= 1.04;
        bar.high *= 1.04;
        bar.low *= 1.04;
        bar.close *= 1.04;
        bar.volume *= 2.0;
      }
    }
  }
  const FeatureMatrix after = build(bumped);

  std::map<Date, std::size_t> row_of;
  for (std::size_t r = 0; r < after.dates.size(); ++r) row_of[after.dates[r]] = r;
  if (before.names != after.names) return "perturbation changed the column set";
  std::size_t compared = 0;
  for (std::size_t r = 0; r < before.dates.size(); ++r) {
    if (before.dates[r] > cut) continue;
    const auto it = row_of.find(before.dates[r]);
    if (it == row_of.end()) return "row " + before.dates[r].to_string() + " vanished";
    for (std::size_t j = 0; j < before.X.cols(); ++j) {
      if (before.X(r, j) != after.X(it->second, j)) {
        return "feature (" + before.dates[r].to_string() + ", " + before.names[j] +
               ") changed after a future-only perturbation";
      }
    }
    if (before.dates[r] < cut && before.labels[r] != after.labels[it->second]) {
      return "label at " + before.dates[r].to_string() + " changed";
    }
    ++compared;
  }
  if (compared < 200) return "too few rows compared: " + std::to_string(compared);
  return "";
}

// ---------------------------------------------------------------------------
// 7. Planted-signal recovery: a tuned depth-limited tree on the indicator
//    representation recovers a 3-day momentum rule buried under 15% noise.

std::string criterion_planted_signal() {
  const auto t0 = Clock::now();
  const PlantedFixture& fx = planted_fixture();

  FoldPlanSpec fspec;
  fspec.train_start = Date(2018, 10, 1);
  fspec.train_end = Date(2019, 12, 31);
  fspec.first_validation = Date(2020, 1, 1);
  fspec.n_folds = 4;

  ModelSpec tree;
  tree.family = ModelFamily::TREE;

  CvContext ctx;
  ctx.data = &fx.d3;
  ctx.plan = make_fold_plan(fx.d3.dates, fspec);
  ctx.base_spec = tree;
  ctx.jobs = 2;
  const Objective obj = [&](const TrialConfig& cfg, std::uint64_t seed) {
    return cv_accuracy(ctx, 1, cfg, seed);
  };
  const SearchResult res = run_search(1, default_search_space(ModelFamily::TREE), 15, {},
                                      derive_seed(7, 1), obj);
  if (!res.best.ok) return "tuning produced no successful trial";

  const auto holdout = [&](const FeatureMatrix& data) {
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t r = 0; r < data.dates.size(); ++r) {
      if (data.dates[r] <= Date(2020, 12, 31)) {
        train_rows.push_back(r);
      } else if (data.dates[r].year() == 2021) {
        test_rows.push_back(r);
      }
    }
    ModelSpec spec = spec_with_config(tree, res.best.config);
    spec.seed = 99;
    const Matrix Xtr = take_rows(data.X, train_rows);
    const FittedScaler scaler = FittedScaler::fit(select_policy(spec, false), Xtr);
    auto model = make_model(spec);
    std::vector<int> ytr;
    for (std::size_t r : train_rows) ytr.push_back(data.labels[r]);
    model->fit(scaler.apply(Xtr), ytr);
    const auto preds = model->predict(scaler.apply(take_rows(data.X, test_rows)));
    std::size_t hits = 0;
    for (std::size_t i = 0; i < test_rows.size(); ++i) {
      if (preds[i] == data.labels[test_rows[i]]) ++hits;
    }
    return std::make_pair(static_cast<double>(hits) / test_rows.size(), preds.size());
  };

  const auto [acc, n_test] = holdout(fx.d3);
  if (n_test < 200) return "holdout has only " + std::to_string(n_test) + " rows";
  if (acc < 0.75) return "holdout accuracy " + str(acc) + " below 0.75";

  // PCA variant on the same fixture and configuration: must run end to end.
  CvContext pca_ctx = ctx;
  pca_ctx.use_pca = true;
  if (!cv_accuracy(pca_ctx, 1, res.best.config, 11)) return "PCA variant failed";

  // Single-day representation variant: must run end to end.
  CvContext d1_ctx = ctx;
  d1_ctx.data = &fx.d1;
  d1_ctx.plan = make_fold_plan(fx.d1.dates, fspec);
  if (!cv_accuracy(d1_ctx, 1, res.best.config, 13)) return "D1 variant failed";
  const auto [d1_acc, d1_n] = holdout(fx.d1);
  (void)d1_acc;  // shape only; the accuracy bar applies to the D3 run
  if (d1_n < 200) return "D1 holdout has only " + std::to_string(d1_n) + " rows";

  const double secs = seconds_since(t0);
  if (secs >= 600.0) return "took " + str(secs) + "s, budget 600s";
  return "";
}

// ---------------------------------------------------------------------------
// 8. Search effectiveness: the guided search beats pure random sampling on at
//    least two of three synthetic objectives, and transfer lifting always
//    produces configurations valid in the child space.

std::string valid_in_space(const TrialConfig& cfg, const SearchSpace& space) {
  if (cfg.size() != space.dims.size()) {
    return "config has " + std::to_string(cfg.size()) + " entries for " +
           std::to_string(space.dims.size()) + " dimensions";
  }
  for (const Dimension& d : space.dims) {
    const auto it = cfg.find(d.name);
    if (it == cfg.end()) return "missing dimension " + d.name;
    switch (d.kind) {
      case Dimension::Kind::REAL: {
        const double* v = std::get_if<double>(&it->second);
        if (!v) return d.name + ": not a real";
        if (*v < d.lo || *v > d.hi) return d.name + ": " + str(*v) + " out of bounds";
        break;
      }
      case Dimension::Kind::INT: {
        const std::int64_t* v = std::get_if<std::int64_t>(&it->second);
        if (!v) return d.name + ": not an integer";
        if (*v < static_cast<std::int64_t>(d.lo) || *v > static_cast<std::int64_t>(d.hi)) {
          return d.name + ": " + std::to_string(*v) + " out of bounds";
        }
        break;
      }
      case Dimension::Kind::CATEGORICAL: {
        const std::string* v = std::get_if<std::string>(&it->second);
        if (!v) return d.name + ": not a category";
        if (std::find(d.options.begin(), d.options.end(), *v) == d.options.end()) {
          return d.name + ": unknown option " + *v;
        }
        break;
      }
      case Dimension::Kind::BOOLEAN:
        if (!std::get_if<bool>(&it->second)) return d.name + ": not a boolean";
        break;
    }
  }
  return "";
}

std::string criterion_search() {
  struct Case {
    SearchSpace space;
    std::function<double(const TrialConfig&)> f;
  };
  std::vector<Case> cases;
  {
    Case c;
    c.space.dims = {Dimension::real("x", 0.0, 1.0), Dimension::real("y", 0.0, 1.0)};
    c.f = [](const TrialConfig& cfg) {
      const double x = std::get<double>(cfg.at("x"));
      const double y = std::get<double>(cfg.at("y"));
      return -((x - 0.7) * (x - 0.7) + (y - 0.2) * (y - 0.2));
    };
    cases.push_back(std::move(c));
  }
  {
    Case c;
    c.space.dims = {Dimension::real("c", 1e-4, 1e2, true)};
    c.f = [](const TrialConfig& cfg) {
      const double v = std::log10(std::get<double>(cfg.at("c")));
      return -(v - 0.5) * (v - 0.5);
    };
    cases.push_back(std::move(c));
  }
  {
    Case c;
    c.space.dims = {Dimension::categorical("kernel", {"a", "b", "c"}),
                    Dimension::real("x", 0.0, 1.0)};
    c.f = [](const TrialConfig& cfg) {
      const double x = std::get<double>(cfg.at("x"));
      const double bonus = std::get<std::string>(cfg.at("kernel")) == "c" ? 0.25 : 0.0;
      return bonus - (x - 0.4) * (x - 0.4);
    };
    cases.push_back(std::move(c));
  }

  int wins = 0;
  for (std::size_t o = 0; o < cases.size(); ++o) {
    const Case& c = cases[o];
    std::vector<double> guided, random;
    for (std::uint64_t s = 0; s < 20; ++s) {
      const Objective obj = [&](const TrialConfig& cfg, std::uint64_t) {
        return std::optional<double>(c.f(cfg));
      };
      const SearchResult res =
          run_search(1, c.space, 50, {}, derive_seed(1000 + o, s), obj);
      guided.push_back(res.best.objective);

      Rng rng(derive_seed(2000 + o, s));
      double best = -1e300;
      for (int i = 0; i < 50; ++i) best = std::max(best, c.f(sample_uniform_config(c.space, rng)));
      random.push_back(best);
    }
    if (median(guided) > median(random)) ++wins;
  }
  if (wins < 2) {
    return "guided search beat random on only " + std::to_string(wins) + " of 3 objectives";
  }

  // Transfer lifting into wider tiers must always land inside the child space.
  const std::vector<std::string> names = {"a", "b", "c", "d", "e"};
  const std::vector<std::string> cats = {"p", "p", "q", "q", "r"};
  const TierSpaces spaces = make_tier_spaces(default_search_space(ModelFamily::TREE), names, cats);
  const Objective depth_obj = [](const TrialConfig& cfg, std::uint64_t) {
    const double d = static_cast<double>(std::get<std::int64_t>(cfg.at("max_depth")));
    return std::optional<double>(-(d - 5.0) * (d - 5.0));
  };
  const SearchResult tier1 = run_search(1, spaces.tier1, 12, {}, 77, depth_obj);
  for (const SearchSpace* child : {&spaces.tier2, &spaces.tier3}) {
    const auto lifted =
        transfer(tier1.history, *child, spaces.feature_names, spaces.feature_cats, 10);
    if (lifted.empty()) return "transfer produced no candidates";
    for (const Trial& t : lifted) {
      const std::string err = valid_in_space(t.config, *child);
      if (!err.empty()) return "lifted config invalid: " + err;
    }
  }
  // And from tier 2 (category bits) into tier 3 (feature bits).
  const Objective cat_obj = [&](const TrialConfig& cfg, std::uint64_t s) {
    return depth_obj(cfg, s);
  };
  const SearchResult tier2 = run_search(2, spaces.tier2, 12, {}, 79, cat_obj);
  const auto lifted =
      transfer(tier2.history, spaces.tier3, spaces.feature_names, spaces.feature_cats, 10);
  if (lifted.empty()) return "tier-2 transfer produced no candidates";
  for (const Trial& t : lifted) {
    const std::string err = valid_in_space(t.config, spaces.tier3);
    if (!err.empty()) return "tier-2 lift invalid: " + err;
    // Feature bits inherit their category's bit, so every feature sharing a
    // category must carry the same value after a tier-2 lift.
    for (std::size_t i = 0; i < names.size(); ++i) {
      for (std::size_t j = i + 1; j < names.size(); ++j) {
        if (cats[i] != cats[j]) continue;
        const bool bi = std::get<bool>(t.config.at(feature_dim_name(names[i])));
        const bool bj = std::get<bool>(t.config.at(feature_dim_name(names[j])));
        if (bi != bj) return "lifted feature bits split category " + cats[i];
      }
    }
  }
  return "";
}

// ---------------------------------------------------------------------------
// 9. Stacking shape: three bases on the three representations feed a meta
//    learner whose design width is the meta dataset plus one column per base,
//    with out-of-fold provenance recorded for every meta-training row.

std::string criterion_stacking() {
  const PlantedFixture& fx = planted_fixture();
  DatasetBundle bundle;
  bundle[Representation::D1] = fx.d1;
  bundle[Representation::D2] = fx.d2;
  bundle[Representation::D3] = fx.d3;

  StackSpec spec;
  {
    StackBase b1;
    b1.spec.family = ModelFamily::KNN;
    b1.spec.hyper = {{"k", std::int64_t{5}}};
    b1.repr = Representation::D1;
    StackBase b2;
    b2.spec.family = ModelFamily::TREE;
    b2.spec.hyper = {{"max_depth", std::int64_t{4}}};
    b2.repr = Representation::D2;
    StackBase b3;
    b3.spec.family = ModelFamily::LOGISTIC;
    b3.spec.hyper = {{"iters", std::int64_t{300}}};
    b3.repr = Representation::D3;
    spec.bases = {b1, b2, b3};
    spec.meta.family = ModelFamily::TREE;
    spec.meta.hyper = {{"max_depth", std::int64_t{3}}};
    spec.meta_repr = Representation::D3;
  }

  const FoldPlan plan = make_rolling_plan(fx.d3.dates.front(), Date(2020, 12, 31));
  if (plan.folds.size() < 2) return "rolling plan produced fewer than 2 folds";
  const StackModel stack = train_stack(spec, bundle, plan, false, 7);

  const std::size_t f3 = fx.d3.names.size();
  if (stack.meta_feature_names.size() != f3 + 3) {
    return "meta width " + std::to_string(stack.meta_feature_names.size()) + ", expected " +
           std::to_string(f3 + 3);
  }
  const std::vector<std::string> tail = {"base_0_KNN", "base_1_TREE", "base_2_LOGISTIC"};
  for (std::size_t i = 0; i < 3; ++i) {
    if (stack.meta_feature_names[f3 + i] != tail[i]) {
      return "meta column " + std::to_string(f3 + i) + " is " +
             stack.meta_feature_names[f3 + i] + ", expected " + tail[i];
    }
  }
  if (stack.bases.size() != 3) return "stack kept the wrong number of bases";
  if (stack.provenance.empty()) return "no provenance recorded";
  if (stack.provenance.size() != stack.meta->training_rows()) {
    return "provenance covers " + std::to_string(stack.provenance.size()) + " rows, meta trained on " +
           std::to_string(stack.meta->training_rows());
  }
  for (const MetaRowProvenance& p : stack.provenance) {
    if (p.fold_index >= plan.folds.size()) return "provenance cites an unknown fold";
    if (!(p.base_training.last < p.date)) {
      return "row " + p.date.to_string() + " trained its bases through " +
             p.base_training.last.to_string();
    }
    const Fold& f = plan.folds[p.fold_index];
    if (p.date < f.validation.first || p.date > f.validation.last) {
      return "row " + p.date.to_string() + " lies outside its fold's validation range";
    }
    if (p.base_training.first != f.train.first || p.base_training.last != f.train.last) {
      return "row " + p.date.to_string() + " records the wrong base training range";
    }
  }
  return "";
}

// ---------------------------------------------------------------------------
// 10. Determinism: the full pipeline, run twice with the same seed into fresh
//     directories, emits byte-identical CSVs.

ExperimentConfig determinism_config(const fs::path& dir) {
  ExperimentConfig cfg;
  cfg.data_dir = (dir / "data").string();
  cfg.out_dir = (dir / "run").string();
  cfg.instruments = {"EURUSD", "DAX"};
  cfg.indicators = {"USA_PMI", "EA_CAB"};
  cfg.representations = {Representation::D1};
  cfg.model.family = ModelFamily::TREE;
  cfg.model.hyper = {{"max_depth", std::int64_t{4}}};
  cfg.fold.train_start = Date(2019, 2, 1);
  cfg.fold.train_end = Date(2019, 12, 31);
  cfg.fold.first_validation = Date(2020, 1, 1);
  cfg.fold.n_folds = 2;
  cfg.budgets = TierBudgets{5, 5, 5};
  cfg.max_tier = 3;
  cfg.protocols = {Protocol::ANNUAL, Protocol::MONTHLY_RETRAIN};
  cfg.test_year = 2021;
  cfg.seed = 7;
  cfg.jobs = 1;
  cfg.synth.start = Date(2019, 1, 1);
  cfg.synth.end = Date(2021, 12, 31);
  cfg.synth.instruments = cfg.instruments;
  cfg.synth.indicators = cfg.indicators;
  cfg.synth.planted.enabled = true;
  return cfg;
}

// Result paths embed a config fingerprint that hashes the directory names, so
// fingerprint-shaped path segments are normalized before comparing trees.
std::string normalize_rel_path(std::string rel) {
  std::string out;
  std::size_t pos = 0;
  while (pos <= rel.size()) {
    const std::size_t slash = rel.find('/', pos);
    const std::string seg = rel.substr(pos, slash == std::string::npos ? rel.size() - pos
                                                                       : slash - pos);
    const bool fp = seg.size() == 16 &&
                    std::all_of(seg.begin(), seg.end(),
                                [](char c) { return std::isxdigit(static_cast<unsigned char>(c)); });
    out += fp ? "FP" : seg;
    if (slash == std::string::npos) break;
    out += '/';
    pos = slash + 1;
  }
  return out;
}

std::map<std::string, std::string> collect_csvs(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file() || e.path().extension() != ".csv") continue;
    out[normalize_rel_path(fs::relative(e.path(), root).generic_string())] = read_file(e.path());
  }
  return out;
}

std::string criterion_determinism(const TempDir& dir_a, const TempDir& dir_b) {
  pipeline::run_full(determinism_config(dir_a.path), false);
  pipeline::run_full(determinism_config(dir_b.path), false);

  const auto a = collect_csvs(dir_a.path);
  const auto b = collect_csvs(dir_b.path);
  if (a.size() < 6) return "only " + std::to_string(a.size()) + " CSVs produced";
  if (a.size() != b.size()) {
    return "run A produced " + std::to_string(a.size()) + " CSVs, run B " +
           std::to_string(b.size());
  }
  for (const auto& [rel, content] : a) {
    const auto it = b.find(rel);
    if (it == b.end()) return "run B is missing " + rel;
    if (it->second != content) return rel + " differs between the runs";
  }
  return "";
}

// ---------------------------------------------------------------------------
// 11. Report shape: the results table carries model x dataset x protocol rows
//     with accuracy and profit as percentages to one decimal.

bool is_percent_1dp(const std::string& s) {
  std::size_t i = 0;
  if (i < s.size() && s[i] == '-') ++i;
  std::size_t digits = 0;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
    ++i;
    ++digits;
  }
  if (digits == 0 || i + 2 != s.size() || s[i] != '.') return false;
  return std::isdigit(static_cast<unsigned char>(s[i + 1])) != 0;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

std::string criterion_report(const TempDir& run_a) {
  // Unit level: a synthetic grid of records must render as the exact table.
  const auto record = [](const std::string& model, const std::string& dataset, Protocol proto,
                         double acc, double profit) {
    EvalRecord r;
    r.model_label = model;
    r.dataset_label = dataset;
    r.result.protocol = proto;
    r.result.test_year = 2022;
    r.result.accuracy_value = acc;
    r.result.curve.factors = {1.0 + profit};
    r.result.curve.value = {1.0, 1.0 + profit};
    return r;
  };
  // Deliberately scrambled insertion order; the table must sort it.
  const std::vector<EvalRecord> records = {
      record("beta", "D3", Protocol::MONTHLY_RETRAIN, 0.579, 0.179),
      record("alpha", "D1", Protocol::ANNUAL, 0.501, 0.101),
      record("beta", "D1", Protocol::MONTHLY_RETRAIN, 0.534, -0.123),
      record("alpha", "D3", Protocol::ANNUAL, 0.523, 0.134),
      record("beta", "D3", Protocol::ANNUAL, 0.568, 0.168),
      record("alpha", "D1", Protocol::MONTHLY_RETRAIN, 0.512, 0.112),
      record("beta", "D1", Protocol::ANNUAL, 0.546, 0.146),
      record("alpha", "D3", Protocol::MONTHLY_RETRAIN, 0.557, 0.157),
  };
  const std::string expected =
      "model,dataset,protocol,accuracy_pct,profit_pct\n"
      "alpha,D1,annually,50.1,10.1\n"
      "alpha,D1,monthly,51.2,11.2\n"
      "alpha,D3,annually,52.3,13.4\n"
      "alpha,D3,monthly,55.7,15.7\n"
      "beta,D1,annually,54.6,14.6\n"
      "beta,D1,monthly,53.4,-12.3\n"
      "beta,D3,annually,56.8,16.8\n"
      "beta,D3,monthly,57.9,17.9\n";
  const std::string got = results_table_csv(records);
  if (got != expected) return "synthetic table mismatch:\n" + got;

  // Pipeline level: the table written by the determinism run.
  fs::path table;
  for (const auto& e : fs::recursive_directory_iterator(run_a.path / "run" / "results")) {
    if (e.is_regular_file() && e.path().filename() == "table.csv") table = e.path();
  }
  if (table.empty()) return "pipeline emitted no table.csv";
  std::ifstream in(table);
  std::string line;
  if (!std::getline(in, line) || line != "model,dataset,protocol,accuracy_pct,profit_pct") {
    return "table.csv header is '" + line + "'";
  }
  std::set<std::string> protocols;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 5) return "table.csv row has " + std::to_string(cells.size()) + " cells";
    if (cells[1] != "D1") return "unexpected dataset label " + cells[1];
    protocols.insert(cells[2]);
    if (!is_percent_1dp(cells[3]) || !is_percent_1dp(cells[4])) {
      return "table.csv row '" + line + "' is not one-decimal percentages";
    }
    ++rows;
  }
  if (rows != 2 || protocols != std::set<std::string>{"annually", "monthly"}) {
    return "table.csv should hold one annually and one monthly row, got " +
           std::to_string(rows);
  }
  return "";
}

}  // namespace

int main() {
  TempDir run_a("det_a"), run_b("det_b");

  struct Criterion {
    int id;
    const char* name;
    std::function<std::string()> fn;
  };
  const std::vector<Criterion> criteria = {
      {1, "indicator oracle", criterion_indicator_oracle},
      {2, "pca invariants", criterion_pca},
      {3, "profit arithmetic", criterion_profit},
      {4, "fold schedule", criterion_fold_plan},
      {5, "model sanity", criterion_model_sanity},
      {6, "leakage nulls", criterion_leakage},
      {7, "planted signal recovery", criterion_planted_signal},
      {8, "search effectiveness", criterion_search},
      {9, "stacking shape", criterion_stacking},
      {10, "determinism", [&] { return criterion_determinism(run_a, run_b); }},
      {11, "report shape", [&] { return criterion_report(run_a); }},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = Clock::now();
    std::string detail;
    try {
      detail = c.fn();
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const double secs = seconds_since(t0);
    if (detail.empty()) {
      std::printf("criterion %2d %-24s PASS (%.1fs)\n", c.id, c.name, secs);
    } else {
      std::printf("criterion %2d %-24s FAIL %s\n", c.id, c.name, detail.c_str());
      ++failures;
    }
    std::fflush(stdout);
  }
  if (failures == 0) {
    std::printf("all 11 criteria passed\n");
  } else {
    std::printf("%d of 11 criteria failed\n", failures);
  }
  return failures == 0 ? 0 : 1;
}
