#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fxlab/csv.hpp"
#include "fxlab/date.hpp"
#include "fxlab/errors.hpp"

#include <json.hpp>

namespace fxlab {

struct OhlcvBar {
  Date date;
  double open = 0, high = 0, low = 0, close = 0, volume = 0;

  void validate(const std::string& context) const {
    if (!(std::isfinite(open) && std::isfinite(high) && std::isfinite(low) &&
          std::isfinite(close) && std::isfinite(volume))) {
      throw ValidationError(context + ": non-finite value");
    }
    if (open <= 0 || high <= 0 || low <= 0 || close <= 0) {
      throw ValidationError(context + ": prices must be > 0");
    }
    if (volume < 0) throw ValidationError(context + ": volume must be >= 0");
    if (low > high) throw ValidationError(context + ": low > high");
    if (low > std::min(open, close)) throw ValidationError(context + ": low above open/close");
    if (high < std::max(open, close)) throw ValidationError(context + ": high below open/close");
  }
};

struct OhlcvSeries {
  std::string instrument_id;
  std::vector<OhlcvBar> bars;  // strictly increasing dates

  const std::vector<OhlcvBar>& checked() const {
    if (bars.empty()) throw ValidationError(instrument_id + ": empty series");
    return bars;
  }
};

struct EconomicRelease {
  Date release_date;
  double value = 0;
};

struct EconomicCalendar {
  std::string indicator_id;
  std::vector<EconomicRelease> releases;  // strictly increasing dates
};

// OHLCV CSV: header `date,open,high,low,close,volume`, one file per
// instrument. Rows may arrive out of order (sorted here); duplicate dates
// are rejected.
inline OhlcvSeries load_ohlcv_csv(const std::string& path, const std::string& instrument_id) {
  OhlcvSeries series;
  series.instrument_id = instrument_id;
  const auto rows = csv::read_file(path, "date,open,high,low,close,volume");
  for (const auto& row : rows) {
    const std::string ctx = path + ":" + std::to_string(row.line_number);
    if (row.fields.size() != 6) throw ParseError(ctx + ": expected 6 fields");
    OhlcvBar bar;
    bar.date = Date::parse(row.fields[0]);
    bar.open = csv::parse_double(row.fields[1], ctx);
    bar.high = csv::parse_double(row.fields[2], ctx);
    bar.low = csv::parse_double(row.fields[3], ctx);
    bar.close = csv::parse_double(row.fields[4], ctx);
    bar.volume = csv::parse_double(row.fields[5], ctx);
    bar.validate(ctx);
    series.bars.push_back(bar);
  }
  if (series.bars.empty()) throw ValidationError(path + ": no data rows");
  std::stable_sort(series.bars.begin(), series.bars.end(),
                   [](const OhlcvBar& a, const OhlcvBar& b) { return a.date < b.date; });
  for (std::size_t i = 1; i < series.bars.size(); ++i) {
    if (series.bars[i].date == series.bars[i - 1].date) {
      throw ValidationError(path + ": duplicate date " + series.bars[i].date.to_string());
    }
  }
  return series;
}

// Calendar CSV: header `date,value`, one file per indicator.
inline EconomicCalendar load_calendar_csv(const std::string& path,
                                          const std::string& indicator_id) {
  EconomicCalendar cal;
  cal.indicator_id = indicator_id;
  const auto rows = csv::read_file(path, "date,value");
  for (const auto& row : rows) {
    const std::string ctx = path + ":" + std::to_string(row.line_number);
    if (row.fields.size() != 2) throw ParseError(ctx + ": expected 2 fields");
    EconomicRelease rel;
    rel.release_date = Date::parse(row.fields[0]);
    rel.value = csv::parse_double(row.fields[1], ctx);
    if (!std::isfinite(rel.value)) throw ValidationError(ctx + ": non-finite value");
    cal.releases.push_back(rel);
  }
  if (cal.releases.empty()) throw ValidationError(path + ": no data rows");
  std::stable_sort(cal.releases.begin(), cal.releases.end(),
                   [](const EconomicRelease& a, const EconomicRelease& b) {
                     return a.release_date < b.release_date;
                   });
  for (std::size_t i = 1; i < cal.releases.size(); ++i) {
    if (cal.releases[i].release_date == cal.releases[i - 1].release_date) {
      throw ValidationError(path + ": duplicate release date " +
                            cal.releases[i].release_date.to_string());
    }
  }
  return cal;
}

// Carries the last released value onto each trading date, plus the number of
// whole calendar days since that release.
inline std::pair<std::vector<double>, std::vector<double>> forward_fill(
    const EconomicCalendar& cal, const std::vector<Date>& dates) {
  if (dates.empty()) return {};
  if (cal.releases.empty() || cal.releases.front().release_date > dates.front()) {
    throw DataError("indicator " + cal.indicator_id + " has no release on or before " +
                    dates.front().to_string());
  }
  std::vector<double> values(dates.size());
  std::vector<double> days_since(dates.size());
  std::size_t r = 0;
  for (std::size_t t = 0; t < dates.size(); ++t) {
    while (r + 1 < cal.releases.size() && cal.releases[r + 1].release_date <= dates[t]) ++r;
    values[t] = cal.releases[r].value;
    days_since[t] = static_cast<double>(dates[t] - cal.releases[r].release_date);
  }
  return {std::move(values), std::move(days_since)};
}

struct PanelColumn {
  std::string name;
  std::string category;  // instrument or indicator id, or "date"
  std::vector<double> values;
};

// One row per kept trading date, aligned across every input series.
struct AlignedPanel {
  std::vector<Date> dates;
  std::vector<PanelColumn> columns;
  std::vector<std::uint8_t> pre_closure;  // 1 iff next calendar day is not a target trading day
  std::vector<std::string> instrument_ids;  // sorted
  std::vector<std::string> indicator_ids;   // sorted
  std::string target_instrument;

  std::size_t column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i].name == name) return i;
    }
    throw DataError("panel has no column '" + name + "'");
  }

  const PanelColumn& column(const std::string& name) const { return columns[column_index(name)]; }

  bool has_column(const std::string& name) const {
    for (const auto& c : columns) {
      if (c.name == name) return true;
    }
    return false;
  }
};

// Aligns all series onto the intersection of their trading calendars and
// forward-fills indicator calendars onto those dates.
inline AlignedPanel build_panel(const std::vector<OhlcvSeries>& series,
                                const std::vector<EconomicCalendar>& calendars,
                                const std::string& target_instrument = "EURUSD") {
  if (series.empty()) throw DataError("build_panel: no instrument series");
  const OhlcvSeries* target = nullptr;
  for (const auto& s : series) {
    s.checked();
    if (s.instrument_id == target_instrument) target = &s;
  }
  if (target == nullptr) {
    throw DataError("build_panel: target series " + target_instrument + " not present");
  }

  // Intersection of all trading calendars.
  std::vector<Date> dates;
  for (const auto& bar : series.front().bars) dates.push_back(bar.date);
  for (std::size_t i = 1; i < series.size(); ++i) {
    std::vector<Date> other;
    for (const auto& bar : series[i].bars) other.push_back(bar.date);
    std::vector<Date> merged;
    std::set_intersection(dates.begin(), dates.end(), other.begin(), other.end(),
                          std::back_inserter(merged));
    dates.swap(merged);
  }
  if (dates.empty()) {
    std::string ids;
    for (const auto& s : series) ids += (ids.empty() ? "" : ", ") + s.instrument_id;
    throw DataError("build_panel: empty trading-date intersection across: " + ids);
  }

  AlignedPanel panel;
  panel.dates = dates;
  panel.target_instrument = target_instrument;

  std::set<Date> target_dates;
  for (const auto& bar : target->bars) target_dates.insert(bar.date);
  panel.pre_closure.resize(dates.size());
  for (std::size_t t = 0; t < dates.size(); ++t) {
    panel.pre_closure[t] = target_dates.count(dates[t].next_day()) ? 0 : 1;
  }

  std::vector<PanelColumn> instrument_cols;
  for (const auto& s : series) {
    panel.instrument_ids.push_back(s.instrument_id);
    // Subset the series onto the panel dates.
    std::vector<double> open(dates.size()), high(dates.size()), low(dates.size()),
        close(dates.size()), volume(dates.size());
    std::size_t b = 0;
    for (std::size_t t = 0; t < dates.size(); ++t) {
      while (s.bars[b].date < dates[t]) ++b;
      open[t] = s.bars[b].open;
      high[t] = s.bars[b].high;
      low[t] = s.bars[b].low;
      close[t] = s.bars[b].close;
      volume[t] = s.bars[b].volume;
    }
    const std::string& id = s.instrument_id;
    instrument_cols.push_back({id + "_open", id, std::move(open)});
    instrument_cols.push_back({id + "_high", id, std::move(high)});
    instrument_cols.push_back({id + "_low", id, std::move(low)});
    instrument_cols.push_back({id + "_close", id, std::move(close)});
    instrument_cols.push_back({id + "_volume", id, std::move(volume)});
  }

  std::vector<PanelColumn> indicator_cols;
  for (const auto& cal : calendars) {
    panel.indicator_ids.push_back(cal.indicator_id);
    auto [values, days_since] = forward_fill(cal, dates);
    indicator_cols.push_back({cal.indicator_id, cal.indicator_id, std::move(values)});
    indicator_cols.push_back(
        {cal.indicator_id + "_days_since", cal.indicator_id, std::move(days_since)});
  }

  // Deterministic order: instrument columns then indicator columns, each
  // block sorted by full column name.
  auto by_name = [](const PanelColumn& a, const PanelColumn& b) { return a.name < b.name; };
  std::sort(instrument_cols.begin(), instrument_cols.end(), by_name);
  std::sort(indicator_cols.begin(), indicator_cols.end(), by_name);
  std::sort(panel.instrument_ids.begin(), panel.instrument_ids.end());
  std::sort(panel.indicator_ids.begin(), panel.indicator_ids.end());

  panel.columns = std::move(instrument_cols);
  for (auto& c : indicator_cols) panel.columns.push_back(std::move(c));
  return panel;
}

// Wide CSV: date, columns in panel order, pre_closure as 0/1.
inline std::string panel_to_csv(const AlignedPanel& panel) {
  std::string out = "date";
  for (const auto& c : panel.columns) out += "," + c.name;
  out += ",pre_closure\n";
  for (std::size_t t = 0; t < panel.dates.size(); ++t) {
    out += panel.dates[t].to_string();
    for (const auto& c : panel.columns) out += "," + csv::format_double(c.values[t]);
    out += panel.pre_closure[t] ? ",1\n" : ",0\n";
  }
  return out;
}

inline void save_panel(const AlignedPanel& panel, const std::string& csv_path,
                       const std::string& meta_path) {
  csv::write_file(csv_path, panel_to_csv(panel));
  nlohmann::json meta;
  meta["target_instrument"] = panel.target_instrument;
  meta["instrument_ids"] = panel.instrument_ids;
  meta["indicator_ids"] = panel.indicator_ids;
  nlohmann::json cats = nlohmann::json::object();
  for (const auto& c : panel.columns) cats[c.name] = c.category;
  meta["column_categories"] = cats;
  csv::write_file(meta_path, meta.dump(2) + "\n");
}

inline AlignedPanel load_panel(const std::string& csv_path, const std::string& meta_path) {
  std::ifstream meta_in(meta_path);
  if (!meta_in) throw DataError("cannot open panel metadata: " + meta_path);
  nlohmann::json meta = nlohmann::json::parse(meta_in);

  AlignedPanel panel;
  panel.target_instrument = meta.at("target_instrument").get<std::string>();
  panel.instrument_ids = meta.at("instrument_ids").get<std::vector<std::string>>();
  panel.indicator_ids = meta.at("indicator_ids").get<std::vector<std::string>>();

  std::ifstream in(csv_path);
  if (!in) throw DataError("cannot open panel: " + csv_path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(csv_path + ": empty file");
  const auto header = csv::split(csv::trim(line));
  if (header.size() < 2 || header.front() != "date" || header.back() != "pre_closure") {
    throw ParseError(csv_path + ": bad panel header");
  }
  const auto& cats = meta.at("column_categories");
  for (std::size_t i = 1; i + 1 < header.size(); ++i) {
    PanelColumn col;
    col.name = header[i];
    col.category = cats.at(col.name).get<std::string>();
    panel.columns.push_back(std::move(col));
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = csv::trim(line);
    if (t.empty()) continue;
    const auto fields = csv::split(t);
    const std::string ctx = csv_path + ":" + std::to_string(lineno);
    if (fields.size() != header.size()) throw ParseError(ctx + ": wrong field count");
    panel.dates.push_back(Date::parse(fields[0]));
    for (std::size_t i = 0; i < panel.columns.size(); ++i) {
      panel.columns[i].values.push_back(csv::parse_double(fields[i + 1], ctx));
    }
    panel.pre_closure.push_back(fields.back() == "1" ? 1 : 0);
  }
  if (panel.dates.empty()) throw ValidationError(csv_path + ": no data rows");
  return panel;
}

}  // namespace fxlab
