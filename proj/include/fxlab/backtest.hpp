#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "fxlab/date.hpp"
#include "fxlab/errors.hpp"
#include "fxlab/tuning.hpp"

namespace fxlab {

enum class Protocol { ANNUAL, MONTHLY_RETRAIN };

inline const char* protocol_name(Protocol p) {
  return p == Protocol::ANNUAL ? "annual" : "monthly_retrain";
}

// Table label: the reporting convention names the fit cadence.
inline const char* protocol_label(Protocol p) {
  return p == Protocol::ANNUAL ? "annually" : "monthly";
}

inline Protocol parse_protocol(const std::string& s) {
  if (s == "annual" || s == "annually") return Protocol::ANNUAL;
  if (s == "monthly" || s == "monthly_retrain") return Protocol::MONTHLY_RETRAIN;
  throw ConfigError("unknown protocol: " + s);
}

// Compounded directional position: each day the full balance rides the
// prediction, long the next close or short of it.
struct ProfitCurve {
  std::vector<double> factors;  // per-day balance multipliers
  std::vector<double> value;    // value[0] = 1, value[i+1] = value[i] * factors[i]

  double final_value() const { return value.back(); }
  double return_fraction() const { return value.back() - 1.0; }
};

inline ProfitCurve profit_curve(const std::vector<int>& preds,
                                const std::vector<double>& closes) {
  if (closes.size() != preds.size() + 1) {
    throw ValidationError("profit: need exactly one more close than predictions");
  }
  for (double c : closes) {
    if (!std::isfinite(c) || c <= 0) throw ValidationError("profit: closes must be positive");
  }
  ProfitCurve curve;
  curve.value.push_back(1.0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double f = preds[i] == 1 ? closes[i + 1] / closes[i] : closes[i] / closes[i + 1];
    curve.factors.push_back(f);
    curve.value.push_back(curve.value.back() * f);
  }
  return curve;
}

// Rows available to a backtest: the dataset's dates with their labels and the
// realized next-close/close ratio each prediction would ride.
struct BacktestInput {
  std::vector<Date> dates;  // ascending
  std::vector<int> labels;
  std::vector<double> forward_ratio;

  void validate() const {
    if (dates.size() != labels.size() || dates.size() != forward_ratio.size()) {
      throw ValidationError("backtest input: size mismatch");
    }
    for (std::size_t i = 1; i < dates.size(); ++i) {
      if (!(dates[i - 1] < dates[i])) throw ValidationError("backtest input: dates not ascending");
    }
    for (std::size_t i = 0; i < dates.size(); ++i) {
      if (!std::isfinite(forward_ratio[i]) || forward_ratio[i] <= 0) {
        throw ValidationError("backtest input: ratios must be positive");
      }
      if ((forward_ratio[i] > 1.0) != (labels[i] == 1)) {
        throw ValidationError("backtest input: label disagrees with ratio at " +
                              dates[i].to_string());
      }
    }
  }
};

// Trains on the given dates, predicts the given dates. The pipeline supplies
// this for a single model or a whole stack; evaluate only dictates cadence.
using FitPredict =
    std::function<std::vector<int>(const std::vector<Date>& train, const std::vector<Date>& test)>;

struct MonthResult {
  int year = 0;
  int month = 0;
  std::size_t days = 0;
  double accuracy = 0;
  double profit_factor = 1;  // product of the month's factors
};

struct EvalResult {
  Protocol protocol = Protocol::ANNUAL;
  int test_year = 0;
  std::size_t n_fits = 0;
  std::vector<Date> test_dates;
  std::vector<int> preds;
  std::vector<int> labels;
  ProfitCurve curve;
  double accuracy_value = 0;
  std::vector<MonthResult> months;
  std::vector<double> daily_returns;  // value increments
};

// Walk-forward evaluation on one test year. ANNUAL fits once on everything
// before the year; MONTHLY_RETRAIN refits at each month boundary with all
// rows before that month (twelve fits).
inline EvalResult evaluate(const BacktestInput& input, Protocol protocol, int test_year,
                           const FitPredict& fit_predict) {
  input.validate();
  std::vector<std::size_t> test_rows;
  std::vector<Date> train_dates;
  for (std::size_t i = 0; i < input.dates.size(); ++i) {
    if (input.dates[i].year() == test_year) {
      test_rows.push_back(i);
    } else if (input.dates[i].year() < test_year) {
      train_dates.push_back(input.dates[i]);
    }
  }
  if (test_rows.empty()) throw DataError("backtest: no rows in test year");
  if (train_dates.empty()) throw DataError("backtest: no rows before test year");

  EvalResult out;
  out.protocol = protocol;
  out.test_year = test_year;
  for (std::size_t r : test_rows) {
    out.test_dates.push_back(input.dates[r]);
    out.labels.push_back(input.labels[r]);
  }

  if (protocol == Protocol::ANNUAL) {
    out.preds = fit_predict(train_dates, out.test_dates);
    out.n_fits = 1;
  } else {
    for (int m = 1; m <= 12; ++m) {
      std::vector<Date> month_dates;
      for (Date d : out.test_dates) {
        if (d.month() == m) month_dates.push_back(d);
      }
      if (month_dates.empty()) {
        throw DataError("backtest: no trading days in " + std::to_string(test_year) + "-" +
                        std::to_string(m));
      }
      const Date month_start(test_year, m, 1);
      std::vector<Date> fit_dates = train_dates;
      for (Date d : out.test_dates) {
        if (d < month_start) fit_dates.push_back(d);
      }
      const std::vector<int> month_preds = fit_predict(fit_dates, month_dates);
      out.preds.insert(out.preds.end(), month_preds.begin(), month_preds.end());
      ++out.n_fits;
    }
  }
  if (out.preds.size() != out.test_dates.size()) {
    throw ValidationError("backtest: predictor returned wrong row count");
  }

  // Chain the per-row ratios into a synthetic close series so the compounded
  // curve is exact even when calendar gaps separate the rows.
  std::vector<double> chain{1.0};
  for (std::size_t r : test_rows) chain.push_back(chain.back() * input.forward_ratio[r]);
  out.curve = profit_curve(out.preds, chain);
  out.accuracy_value = accuracy(out.preds, out.labels);
  for (std::size_t i = 0; i + 1 < out.curve.value.size(); ++i) {
    out.daily_returns.push_back(out.curve.value[i + 1] - out.curve.value[i]);
  }

  for (int m = 1; m <= 12; ++m) {
    MonthResult mr;
    mr.year = test_year;
    mr.month = m;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < out.test_dates.size(); ++i) {
      if (out.test_dates[i].month() != m) continue;
      ++mr.days;
      hits += out.preds[i] == out.labels[i];
      mr.profit_factor *= out.curve.factors[i];
    }
    if (mr.days == 0) continue;
    mr.accuracy = static_cast<double>(hits) / mr.days;
    out.months.push_back(mr);
  }
  return out;
}

}  // namespace fxlab
