#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <string>
#include <vector>

#include "fxlab/errors.hpp"
#include "fxlab/market_data.hpp"

namespace fxlab {

enum class IndicatorKind {
  SMA_CLOSE,
  WMA_CLOSE,
  SMA_VOLUME,
  WMA_VOLUME,
  MOMENTUM,
  STOCH_K,
  STOCH_D,
  RSI,
  WILLIAMS_R,
  AD_OSC,
  CCI,
  ROC,
  DISPARITY,
  OSCP,
  MACD,
  MACD_SIGNAL,
  EMA,
};

inline const char* indicator_kind_name(IndicatorKind kind) {
  switch (kind) {
    case IndicatorKind::SMA_CLOSE: return "SMA_CLOSE";
    case IndicatorKind::WMA_CLOSE: return "WMA_CLOSE";
    case IndicatorKind::SMA_VOLUME: return "SMA_VOLUME";
    case IndicatorKind::WMA_VOLUME: return "WMA_VOLUME";
    case IndicatorKind::MOMENTUM: return "MOMENTUM";
    case IndicatorKind::STOCH_K: return "STOCH_K";
    case IndicatorKind::STOCH_D: return "STOCH_D";
    case IndicatorKind::RSI: return "RSI";
    case IndicatorKind::WILLIAMS_R: return "WILLIAMS_R";
    case IndicatorKind::AD_OSC: return "AD_OSC";
    case IndicatorKind::CCI: return "CCI";
    case IndicatorKind::ROC: return "ROC";
    case IndicatorKind::DISPARITY: return "DISPARITY";
    case IndicatorKind::OSCP: return "OSCP";
    case IndicatorKind::MACD: return "MACD";
    case IndicatorKind::MACD_SIGNAL: return "MACD_SIGNAL";
    case IndicatorKind::EMA: return "EMA";
  }
  throw ConfigError("unknown indicator kind");
}

inline int indicator_arity(IndicatorKind kind) {
  switch (kind) {
    case IndicatorKind::AD_OSC: return 0;
    case IndicatorKind::OSCP:
    case IndicatorKind::MACD: return 2;
    case IndicatorKind::MACD_SIGNAL: return 3;
    default: return 1;
  }
}

struct IndicatorSpec {
  IndicatorKind kind = IndicatorKind::SMA_CLOSE;
  std::vector<int> windows;

  void validate() const {
    const int arity = indicator_arity(kind);
    if (static_cast<int>(windows.size()) != arity) {
      throw ConfigError(std::string(indicator_kind_name(kind)) + " takes " +
                        std::to_string(arity) + " parameter(s), got " +
                        std::to_string(windows.size()));
    }
    for (int w : windows) {
      if (w < 1) throw ConfigError(std::string(indicator_kind_name(kind)) + ": window must be >= 1");
    }
    if ((kind == IndicatorKind::OSCP || kind == IndicatorKind::MACD ||
         kind == IndicatorKind::MACD_SIGNAL) &&
        windows[0] >= windows[1]) {
      throw ConfigError(std::string(indicator_kind_name(kind)) + ": requires N < M");
    }
  }

  std::string name(const std::string& instrument) const {
    std::string out = instrument + "_" + indicator_kind_name(kind);
    for (int w : windows) out += "_" + std::to_string(w);
    return out;
  }
};

// Length of the undefined prefix for a spec; values are defined from this
// index onward (given a long enough series).
inline std::size_t indicator_warm_up(const IndicatorSpec& spec) {
  spec.validate();
  const auto n = [&](int i) { return static_cast<std::size_t>(spec.windows[i]); };
  switch (spec.kind) {
    case IndicatorKind::SMA_CLOSE:
    case IndicatorKind::WMA_CLOSE:
    case IndicatorKind::SMA_VOLUME:
    case IndicatorKind::WMA_VOLUME:
    case IndicatorKind::DISPARITY:
    case IndicatorKind::CCI: return n(0) - 1;
    case IndicatorKind::MOMENTUM:
    case IndicatorKind::ROC:
    case IndicatorKind::STOCH_K:
    case IndicatorKind::WILLIAMS_R:
    case IndicatorKind::RSI: return n(0);
    case IndicatorKind::STOCH_D: return 2 * n(0) - 1;
    case IndicatorKind::OSCP: return n(1) - 1;
    case IndicatorKind::AD_OSC: return 1;
    case IndicatorKind::MACD:
    case IndicatorKind::MACD_SIGNAL:
    case IndicatorKind::EMA: return 0;
  }
  throw ConfigError("unknown indicator kind");
}

struct IndicatorSeries {
  IndicatorSpec spec;
  std::string source;
  std::size_t warm_up = 0;
  std::vector<double> values;  // NaN during warm-up

  bool defined(std::size_t t) const { return t >= warm_up && t < values.size(); }
};

namespace detail {

constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

inline std::vector<double> sma(const std::vector<double>& x, int n) {
  std::vector<double> out(x.size(), kUndefined);
  double run = 0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    run += x[t];
    if (t >= static_cast<std::size_t>(n)) run -= x[t - n];
    if (t + 1 >= static_cast<std::size_t>(n)) out[t] = run / n;
  }
  return out;
}

inline std::vector<double> wma(const std::vector<double>& x, int n) {
  std::vector<double> out(x.size(), kUndefined);
  const double denom = n * (n + 1) / 2.0;
  for (std::size_t t = n - 1; t < x.size(); ++t) {
    double acc = 0;
    for (int i = 0; i < n; ++i) acc += (n - i) * x[t - i];
    out[t] = acc / denom;
  }
  return out;
}

// Sliding-window extrema over x[t-n .. t] (window length n+1), defined from
// index n, via monotonic deques.
inline std::vector<double> window_max(const std::vector<double>& x, int n) {
  std::vector<double> out(x.size(), kUndefined);
  std::deque<std::size_t> q;
  for (std::size_t t = 0; t < x.size(); ++t) {
    while (!q.empty() && x[q.back()] <= x[t]) q.pop_back();
    q.push_back(t);
    if (q.front() + n < t) q.pop_front();
    if (t >= static_cast<std::size_t>(n)) out[t] = x[q.front()];
  }
  return out;
}

inline std::vector<double> window_min(const std::vector<double>& x, int n) {
  std::vector<double> out(x.size(), kUndefined);
  std::deque<std::size_t> q;
  for (std::size_t t = 0; t < x.size(); ++t) {
    while (!q.empty() && x[q.back()] >= x[t]) q.pop_back();
    q.push_back(t);
    if (q.front() + n < t) q.pop_front();
    if (t >= static_cast<std::size_t>(n)) out[t] = x[q.front()];
  }
  return out;
}

inline std::vector<double> stoch_k(const std::vector<double>& high,
                                   const std::vector<double>& low,
                                   const std::vector<double>& close, int n) {
  const auto hh = window_max(high, n);
  const auto ll = window_min(low, n);
  std::vector<double> out(close.size(), kUndefined);
  for (std::size_t t = n; t < close.size(); ++t) {
    const double denom = hh[t] - ll[t];
    out[t] = denom == 0 ? 50.0 : 100.0 * (close[t] - ll[t]) / denom;
  }
  return out;
}

}  // namespace detail

// EMA with alpha = 2/(n+1), seeded with the first observation.
inline std::vector<double> ema(const std::vector<double>& x, int n) {
  if (n < 1) throw ConfigError("EMA: window must be >= 1");
  if (x.empty()) throw ConfigError("EMA: empty series");
  const double alpha = 2.0 / (n + 1);
  std::vector<double> out(x.size());
  out[0] = x[0];
  for (std::size_t t = 1; t < x.size(); ++t) out[t] = alpha * x[t] + (1 - alpha) * out[t - 1];
  return out;
}

// Core evaluation over raw aligned high/low/close/volume vectors.  All four
// vectors must share one length; which of them are read depends on the kind.
inline std::vector<double> compute_indicator_values(const IndicatorSpec& spec,
                                                    const std::vector<double>& high,
                                                    const std::vector<double>& low,
                                                    const std::vector<double>& close,
                                                    const std::vector<double>& volume) {
  spec.validate();
  using detail::kUndefined;
  const std::size_t len = close.size();
  const int n = spec.windows.empty() ? 0 : spec.windows[0];
  std::vector<double> out(len, kUndefined);

  switch (spec.kind) {
    case IndicatorKind::SMA_CLOSE: return detail::sma(close, n);
    case IndicatorKind::WMA_CLOSE: return detail::wma(close, n);
    case IndicatorKind::SMA_VOLUME: return detail::sma(volume, n);
    case IndicatorKind::WMA_VOLUME: return detail::wma(volume, n);

    case IndicatorKind::MOMENTUM:
      for (std::size_t t = n; t < len; ++t) out[t] = close[t] - close[t - n];
      return out;

    case IndicatorKind::ROC:
      for (std::size_t t = n; t < len; ++t) out[t] = 100.0 * close[t] / close[t - n];
      return out;

    case IndicatorKind::STOCH_K: return detail::stoch_k(high, low, close, n);

    case IndicatorKind::STOCH_D: {
      const auto k = detail::stoch_k(high, low, close, n);
      for (std::size_t t = 2 * n - 1; t < len; ++t) {
        double acc = 0;
        for (int i = 0; i < n; ++i) acc += k[t - i];
        out[t] = acc / n;
      }
      return out;
    }

    case IndicatorKind::RSI: {
      // Running sums of up/down moves over the last n single-day changes.
      double up = 0, dw = 0;
      for (std::size_t t = 1; t < len; ++t) {
        const double d = close[t] - close[t - 1];
        up += std::max(d, 0.0);
        dw += std::max(-d, 0.0);
        if (t > static_cast<std::size_t>(n)) {
          const double old = close[t - n] - close[t - n - 1];
          up -= std::max(old, 0.0);
          dw -= std::max(-old, 0.0);
        }
        if (t >= static_cast<std::size_t>(n)) {
          if (up == 0 && dw == 0) {
            out[t] = 50.0;
          } else if (dw == 0) {
            out[t] = 100.0;
          } else {
            out[t] = 100.0 - 100.0 / (1.0 + up / dw);
          }
        }
      }
      return out;
    }

    case IndicatorKind::WILLIAMS_R:
      // Single-day reference H(t-n), L(t-n); result clamped into [0, 100].
      for (std::size_t t = n; t < len; ++t) {
        const double denom = high[t - n] - low[t - n];
        const double v = denom == 0 ? 50.0 : 100.0 * (high[t - n] - close[t]) / denom;
        out[t] = std::clamp(v, 0.0, 100.0);
      }
      return out;

    case IndicatorKind::AD_OSC:
      for (std::size_t t = 1; t < len; ++t) {
        const double denom = high[t] - low[t];
        out[t] = denom == 0 ? 0.0 : (high[t] - close[t - 1]) / denom;
      }
      return out;

    case IndicatorKind::CCI: {
      std::vector<double> m(len);
      for (std::size_t t = 0; t < len; ++t) m[t] = (high[t] + low[t] + close[t]) / 3.0;
      for (std::size_t t = n - 1; t < len; ++t) {
        double sm = 0;
        for (int i = 0; i < n; ++i) sm += m[t - i];
        sm /= n;
        double dev = 0;
        for (int i = 0; i < n; ++i) dev += std::fabs(m[t - i] - sm);
        dev /= n;
        out[t] = dev == 0 ? 0.0 : (m[t] - sm) / (0.015 * dev);
      }
      return out;
    }

    case IndicatorKind::DISPARITY: {
      const auto avg = detail::sma(close, n);
      for (std::size_t t = n - 1; t < len; ++t) out[t] = 100.0 * close[t] / avg[t];
      return out;
    }

    case IndicatorKind::OSCP: {
      const auto fast = detail::sma(close, spec.windows[0]);
      const auto slow = detail::sma(close, spec.windows[1]);
      for (std::size_t t = spec.windows[1] - 1; t < len; ++t) {
        out[t] = (fast[t] - slow[t]) / fast[t];
      }
      return out;
    }

    case IndicatorKind::MACD: {
      const auto fast = ema(close, spec.windows[0]);
      const auto slow = ema(close, spec.windows[1]);
      for (std::size_t t = 0; t < len; ++t) out[t] = fast[t] - slow[t];
      return out;
    }

    case IndicatorKind::MACD_SIGNAL: {
      const auto fast = ema(close, spec.windows[0]);
      const auto slow = ema(close, spec.windows[1]);
      std::vector<double> macd(len);
      for (std::size_t t = 0; t < len; ++t) macd[t] = fast[t] - slow[t];
      return ema(macd, spec.windows[2]);
    }

    case IndicatorKind::EMA: return ema(close, n);
  }
  throw ConfigError("unknown indicator kind");
}

inline IndicatorSeries compute(const IndicatorSpec& spec, const OhlcvSeries& series) {
  const auto& bars = series.checked();
  const std::size_t warm = indicator_warm_up(spec);
  if (bars.size() <= warm) {
    throw DataError(spec.name(series.instrument_id) + ": series shorter than warm-up (" +
                    std::to_string(bars.size()) + " <= " + std::to_string(warm) + ")");
  }
  std::vector<double> high(bars.size()), low(bars.size()), close(bars.size()),
      volume(bars.size());
  for (std::size_t t = 0; t < bars.size(); ++t) {
    high[t] = bars[t].high;
    low[t] = bars[t].low;
    close[t] = bars[t].close;
    volume[t] = bars[t].volume;
  }
  IndicatorSeries out;
  out.spec = spec;
  out.source = series.instrument_id;
  out.warm_up = warm;
  out.values = compute_indicator_values(spec, high, low, close, volume);
  return out;
}

// The full Table 1 grid: 92 specs per source instrument, in table order.
inline std::vector<IndicatorSpec> indicator_catalog() {
  std::vector<IndicatorSpec> out;
  const std::vector<int> ma_grid = {3, 7, 14, 30, 60, 90};
  const std::vector<int> osc_grid = {1, 2, 3, 7, 14, 30, 60, 90};
  const std::vector<int> rsi_grid = {7, 14, 30, 60, 90};
  const std::vector<std::vector<int>> oscp_grid = {{3, 7}, {7, 14}, {14, 30}, {30, 60}, {60, 90}};
  const std::vector<std::vector<int>> macd_grid = {{7, 21}, {12, 26}, {20, 34}};
  const std::vector<std::vector<int>> macd_sig_grid = {{7, 21, 4}, {12, 26, 9}, {20, 34, 17}};

  auto add = [&](IndicatorKind kind, const std::vector<int>& grid) {
    for (int n : grid) out.push_back({kind, {n}});
  };
  add(IndicatorKind::SMA_CLOSE, ma_grid);
  add(IndicatorKind::WMA_CLOSE, ma_grid);
  add(IndicatorKind::SMA_VOLUME, ma_grid);
  add(IndicatorKind::WMA_VOLUME, ma_grid);
  add(IndicatorKind::MOMENTUM, osc_grid);
  add(IndicatorKind::STOCH_K, osc_grid);
  add(IndicatorKind::STOCH_D, osc_grid);
  add(IndicatorKind::RSI, rsi_grid);
  add(IndicatorKind::WILLIAMS_R, osc_grid);
  out.push_back({IndicatorKind::AD_OSC, {}});
  add(IndicatorKind::CCI, rsi_grid);
  add(IndicatorKind::ROC, osc_grid);
  add(IndicatorKind::DISPARITY, ma_grid);
  for (const auto& w : oscp_grid) out.push_back({IndicatorKind::OSCP, w});
  for (const auto& w : macd_grid) out.push_back({IndicatorKind::MACD, w});
  for (const auto& w : macd_sig_grid) out.push_back({IndicatorKind::MACD_SIGNAL, w});
  return out;
}

struct SourcedIndicatorSpec {
  std::string source;
  IndicatorSpec spec;
};

inline std::vector<SourcedIndicatorSpec> expand_catalog(const std::vector<std::string>& sources) {
  std::vector<SourcedIndicatorSpec> out;
  const auto catalog = indicator_catalog();
  for (const auto& src : sources) {
    for (const auto& spec : catalog) out.push_back({src, spec});
  }
  return out;
}

}  // namespace fxlab
