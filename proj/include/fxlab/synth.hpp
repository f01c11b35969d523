#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fxlab/csv.hpp"
#include "fxlab/manifest.hpp"
#include "fxlab/market_data.hpp"
#include "fxlab/rng.hpp"

namespace fxlab {

inline const std::vector<std::string>& default_forex_ids() {
  static const std::vector<std::string> ids = {
      "AUDUSD", "EURAUD", "EURCAD", "EURCHF", "EURGBP", "EURJPY", "EURNZD",
      "EURUSD", "GBPUSD", "NZDUSD", "USDCAD", "USDCHF", "USDJPY"};
  return ids;
}

inline const std::vector<std::string>& default_index_ids() {
  static const std::vector<std::string> ids = {"CAC40",      "DAX",       "STOXX50",
                                               "STOXX600",   "DJI",       "NASDAQCOMP",
                                               "NASDAQ100",  "RUSSELL2000", "SP500"};
  return ids;
}

inline std::vector<std::string> default_instrument_ids() {
  std::vector<std::string> out = default_forex_ids();
  const auto& idx = default_index_ids();
  out.insert(out.end(), idx.begin(), idx.end());
  return out;
}

inline std::vector<std::string> default_indicator_ids() {
  std::vector<std::string> out;
  for (const char* region : {"USA", "EA"}) {
    for (const char* kind : {"GDP", "PMI", "CPI", "CPI_YOY", "INTEREST_RATE", "CAB"}) {
      out.push_back(std::string(region) + "_" + kind);
    }
  }
  return out;
}

// Optional structure in the generated target series: tomorrow's direction is
// today's momentum sign, flipped with probability `noise`. A learner that
// recovers the momentum feature predicts with accuracy 1 - noise.
struct PlantedSignal {
  bool enabled = false;
  std::string target = "EURUSD";
  int momentum = 3;     // lookback in trading days
  double noise = 0.15;  // direction flip probability
  double step = 0.004;  // log-return magnitude

  nlohmann::json to_json() const {
    return {{"enabled", enabled}, {"target", target},      {"momentum", momentum},
            {"noise", noise},     {"step", step}};
  }

  static PlantedSignal from_json(const nlohmann::json& j) {
    PlantedSignal out;
    out.enabled = j.value("enabled", false);
    out.target = j.value("target", std::string("EURUSD"));
    out.momentum = j.value("momentum", 3);
    out.noise = j.value("noise", 0.15);
    out.step = j.value("step", 0.004);
    if (out.momentum < 1) throw ConfigError("planted signal: momentum must be >= 1");
    if (out.noise < 0 || out.noise >= 0.5) throw ConfigError("planted signal: noise in [0, 0.5)");
    if (out.step <= 0) throw ConfigError("planted signal: step must be > 0");
    return out;
  }
};

struct SynthConfig {
  Date start{2013, 4, 30};
  Date end{2022, 12, 30};
  std::vector<std::string> instruments = default_instrument_ids();
  std::vector<std::string> indicators = default_indicator_ids();
  PlantedSignal planted;

  nlohmann::json to_json() const {
    return {{"start", start.to_string()},
            {"end", end.to_string()},
            {"instruments", instruments},
            {"indicators", indicators},
            {"planted", planted.to_json()}};
  }

  static SynthConfig from_json(const nlohmann::json& j) {
    SynthConfig out;
    if (j.contains("start")) out.start = Date::parse(j.at("start").get<std::string>());
    if (j.contains("end")) out.end = Date::parse(j.at("end").get<std::string>());
    if (j.contains("instruments")) {
      out.instruments = j.at("instruments").get<std::vector<std::string>>();
    }
    if (j.contains("indicators")) {
      out.indicators = j.at("indicators").get<std::vector<std::string>>();
    }
    if (j.contains("planted")) out.planted = PlantedSignal::from_json(j.at("planted"));
    if (out.start >= out.end) throw ConfigError("synth: start must precede end");
    if (out.instruments.empty()) throw ConfigError("synth: at least one instrument");
    return out;
  }
};

inline std::vector<Date> weekday_dates(Date start, Date end) {
  std::vector<Date> out;
  for (Date d = start; d <= end; d = d.next_day()) {
    if (d.weekday() < 5) out.push_back(d);
  }
  return out;
}

// Geometric random-walk bars; the planted variant drives each day's sign from
// the momentum of the path so far, so the signal survives feature building.
inline OhlcvSeries synth_ohlcv(const std::string& id, const std::vector<Date>& dates,
                               std::uint64_t seed, const PlantedSignal* planted) {
  Rng rng(seed);
  const bool is_index =
      std::find(default_index_ids().begin(), default_index_ids().end(), id) !=
      default_index_ids().end();
  std::vector<double> close(dates.size());
  close[0] = is_index ? rng.uniform(2000.0, 15000.0) : rng.uniform(0.8, 1.6);
  for (std::size_t t = 0; t + 1 < dates.size(); ++t) {
    if (planted != nullptr && planted->enabled && planted->target == id) {
      bool up;
      if (t < static_cast<std::size_t>(planted->momentum)) {
        up = rng.bernoulli(0.5);
      } else {
        up = close[t] > close[t - planted->momentum];
        if (rng.bernoulli(planted->noise)) up = !up;
      }
      const double mag = planted->step * rng.uniform(0.8, 1.2);
      close[t + 1] = close[t] * std::exp(up ? mag : -mag);
    } else {
      close[t + 1] = close[t] * std::exp(rng.normal(0.0, 0.006));
    }
  }

  OhlcvSeries series;
  series.instrument_id = id;
  for (std::size_t t = 0; t < dates.size(); ++t) {
    OhlcvBar bar;
    bar.date = dates[t];
    bar.close = close[t];
    bar.open = t == 0 ? close[0] * std::exp(rng.normal(0.0, 0.002)) : close[t - 1];
    const double span_up = std::abs(rng.normal(0.0, 0.0015));
    const double span_dn = std::abs(rng.normal(0.0, 0.0015));
    bar.high = std::max(bar.open, bar.close) * (1.0 + span_up);
    bar.low = std::min(bar.open, bar.close) * (1.0 - span_dn);
    bar.volume = (is_index ? 1e6 : 1e5) * std::exp(rng.normal(0.0, 0.4));
    series.bars.push_back(bar);
  }
  series.checked();
  return series;
}

inline EconomicCalendar synth_calendar(const std::string& id, Date start, Date end,
                                       std::uint64_t seed) {
  Rng rng(seed);
  const bool is_gdp = id.find("GDP") != std::string::npos;
  const bool is_pmi = id.find("PMI") != std::string::npos;
  const bool is_cpi_yoy = id.find("CPI_YOY") != std::string::npos;
  const bool is_cpi = !is_cpi_yoy && id.find("CPI") != std::string::npos;
  const bool is_rate = id.find("INTEREST_RATE") != std::string::npos;
  const bool is_ea = id.rfind("EA_", 0) == 0;
  const int period = is_gdp ? 91 : (is_rate ? 42 : 30);

  double value;
  if (is_gdp) {
    value = rng.uniform(1.5, 3.0);
  } else if (is_pmi) {
    value = rng.uniform(48.0, 55.0);
  } else if (is_cpi) {
    value = 100.0;
  } else if (is_cpi_yoy) {
    value = is_ea ? rng.uniform(-0.5, 1.5) : rng.uniform(0.5, 2.5);
  } else if (is_rate) {
    value = is_ea ? rng.uniform(-0.5, 0.5) : rng.uniform(0.25, 2.5);
  } else {
    value = rng.normal(0.0, 20.0);  // current account balance
  }

  EconomicCalendar cal;
  cal.indicator_id = id;
  // The first release lands before the first trading day so forward filling
  // is defined from the start of the panel.
  Date d = start.plus_days(-10 - rng.uniform_int(0, 10));
  while (d <= end) {
    cal.releases.push_back({d, value});
    if (is_gdp) {
      value += rng.normal(0.0, 0.3);
    } else if (is_pmi) {
      value = std::clamp(value + rng.normal(0.0, 0.8), 30.0, 70.0);
    } else if (is_cpi) {
      value += rng.uniform(0.0, 0.4);
    } else if (is_cpi_yoy) {
      value += rng.normal(0.0, 0.25);
    } else if (is_rate) {
      if (rng.bernoulli(0.3)) value += rng.bernoulli(0.5) ? 0.25 : -0.25;
    } else {
      value += rng.normal(0.0, 4.0);
    }
    d = d.plus_days(period + rng.uniform_int(-2, 2));
  }
  return cal;
}

inline std::string ohlcv_to_csv(const OhlcvSeries& series) {
  std::string out = "date,open,high,low,close,volume\n";
  for (const OhlcvBar& b : series.bars) {
    out += b.date.to_string() + "," + csv::format_double(b.open) + "," +
           csv::format_double(b.high) + "," + csv::format_double(b.low) + "," +
           csv::format_double(b.close) + "," + csv::format_double(b.volume) + "\n";
  }
  return out;
}

inline std::string calendar_to_csv(const EconomicCalendar& cal) {
  std::string out = "date,value\n";
  for (const EconomicRelease& r : cal.releases) {
    out += r.release_date.to_string() + "," + csv::format_double(r.value) + "\n";
  }
  return out;
}

// Writes <dir>/ohlcv/<ID>.csv and <dir>/calendar/<ID>.csv for every id.
inline void write_synth_data(const SynthConfig& config, std::uint64_t seed,
                             const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "ohlcv");
  fs::create_directories(dir / "calendar");
  const std::vector<Date> dates = weekday_dates(config.start, config.end);
  if (dates.size() < 2) throw ConfigError("synth: span has fewer than 2 weekdays");
  for (const std::string& id : config.instruments) {
    const OhlcvSeries series =
        synth_ohlcv(id, dates, derive_seed(seed, fnv1a64(id)), &config.planted);
    csv::write_file(dir / "ohlcv" / (id + ".csv"), ohlcv_to_csv(series));
  }
  for (const std::string& id : config.indicators) {
    const EconomicCalendar cal =
        synth_calendar(id, config.start, config.end, derive_seed(seed, fnv1a64(id)));
    csv::write_file(dir / "calendar" / (id + ".csv"), calendar_to_csv(cal));
  }
  csv::write_file(dir / "synth_config.json", config.to_json().dump(2) + "\n");
}

}  // namespace fxlab
