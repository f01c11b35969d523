#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <numbers>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fxlab/csv.hpp"
#include "fxlab/date.hpp"
#include "fxlab/errors.hpp"
#include "fxlab/indicators.hpp"
#include "fxlab/market_data.hpp"
#include "fxlab/matrix.hpp"

#include <json.hpp>

namespace fxlab {

// ---------------------------------------------------------------------------
// Distribution transforms

enum class TransformTag { NONE, SQRT_SIGNED, LOG_SHIFTED };

struct ColumnTransform {
  TransformTag tag = TransformTag::NONE;
  double offset = 0;  // LOG_SHIFTED only: fitted minimum of the column
};

struct TransformLedger {
  std::map<std::string, ColumnTransform> entries;

  nlohmann::json to_json() const {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [name, tr] : entries) {
      nlohmann::json e;
      e["tag"] = tr.tag == TransformTag::SQRT_SIGNED ? "sqrt_signed" : "log_shifted";
      if (tr.tag == TransformTag::LOG_SHIFTED) e["offset"] = tr.offset;
      out[name] = e;
    }
    return out;
  }

  static TransformLedger from_json(const nlohmann::json& j) {
    TransformLedger ledger;
    for (auto it = j.begin(); it != j.end(); ++it) {
      ColumnTransform tr;
      const std::string tag = it.value().at("tag").get<std::string>();
      if (tag == "sqrt_signed") {
        tr.tag = TransformTag::SQRT_SIGNED;
      } else if (tag == "log_shifted") {
        tr.tag = TransformTag::LOG_SHIFTED;
        tr.offset = it.value().at("offset").get<double>();
      } else {
        throw ConfigError("unknown transform tag: " + tag);
      }
      ledger.entries[it.key()] = tr;
    }
    return ledger;
  }
};

inline double signed_sqrt(double x) { return x < 0 ? -std::sqrt(-x) : std::sqrt(x); }

inline bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Volumes and central-bank rates get a sign-preserving square root; the EA
// CPI YoY level gets a shifted log whose offset is fitted on `fit_through`
// and earlier rows only.
inline TransformLedger fit_transforms(const AlignedPanel& panel, Date fit_through) {
  TransformLedger ledger;
  for (const auto& col : panel.columns) {
    if (ends_with(col.name, "_volume")) {
      ledger.entries[col.name] = {TransformTag::SQRT_SIGNED, 0};
    } else if (col.name == col.category && ends_with(col.name, "_INTEREST_RATE")) {
      ledger.entries[col.name] = {TransformTag::SQRT_SIGNED, 0};
    } else if (col.name == "EA_CPI_YOY") {
      double m = std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t < panel.dates.size(); ++t) {
        if (panel.dates[t] <= fit_through) m = std::min(m, col.values[t]);
      }
      if (!std::isfinite(m)) {
        throw DataError("EA_CPI_YOY: no rows on or before " + fit_through.to_string() +
                        " to fit the log offset");
      }
      ledger.entries[col.name] = {TransformTag::LOG_SHIFTED, m};
    }
  }
  return ledger;
}

inline AlignedPanel apply_transforms(AlignedPanel panel, const TransformLedger& ledger) {
  for (auto& col : panel.columns) {
    const auto it = ledger.entries.find(col.name);
    if (it == ledger.entries.end()) continue;
    const ColumnTransform& tr = it->second;
    for (double& v : col.values) {
      if (tr.tag == TransformTag::SQRT_SIGNED) {
        v = signed_sqrt(v);
      } else {
        const double arg = v - tr.offset + 1.0;
        if (arg <= 0) {
          throw NumericError(col.name + ": log transform argument " + csv::format_double(arg) +
                             " <= 0");
        }
        v = std::log(arg);
      }
    }
  }
  return panel;
}

// ---------------------------------------------------------------------------
// Date encodings

enum class DateFamily { TREE, CONTINUOUS };

inline const char* date_family_name(DateFamily f) {
  return f == DateFamily::TREE ? "TREE" : "CONTINUOUS";
}

struct DateColumns {
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;
};

inline DateColumns encode_dates(const std::vector<Date>& dates, DateFamily family) {
  DateColumns out;
  const std::size_t n = dates.size();
  if (family == DateFamily::TREE) {
    out.names = {"date_day", "date_month", "date_weekday"};
    out.values.assign(3, std::vector<double>(n));
    for (std::size_t t = 0; t < n; ++t) {
      out.values[0][t] = dates[t].day();
      out.values[1][t] = dates[t].month();
      out.values[2][t] = dates[t].weekday();
    }
  } else {
    out.names = {"date_day_sin",     "date_day_cos",  "date_month_sin",
                 "date_month_cos",   "date_weekday_sin", "date_weekday_cos"};
    out.values.assign(6, std::vector<double>(n));
    const double tau = 2.0 * std::numbers::pi;
    for (std::size_t t = 0; t < n; ++t) {
      const double day_angle =
          tau * (dates[t].day() - 1) / Date::days_in_month(dates[t].year(), dates[t].month());
      const double month_angle = tau * (dates[t].month() - 1) / 12.0;
      const double weekday_angle = tau * dates[t].weekday() / 7.0;
      out.values[0][t] = std::sin(day_angle);
      out.values[1][t] = std::cos(day_angle);
      out.values[2][t] = std::sin(month_angle);
      out.values[3][t] = std::cos(month_angle);
      out.values[4][t] = std::sin(weekday_angle);
      out.values[5][t] = std::cos(weekday_angle);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Target

// label[t] = 1 iff close[t+1] > close[t]; the final date gets no label.
inline std::vector<int> build_target(const std::vector<double>& close) {
  if (close.size() < 2) throw DataError("build_target: need at least 2 closes");
  std::vector<int> labels(close.size() - 1);
  for (std::size_t t = 0; t + 1 < close.size(); ++t) labels[t] = close[t + 1] > close[t] ? 1 : 0;
  return labels;
}

// ---------------------------------------------------------------------------
// Dataset assembly

enum class Representation { D1, D2, D3 };

inline const char* representation_name(Representation r) {
  switch (r) {
    case Representation::D1: return "D1";
    case Representation::D2: return "D2";
    case Representation::D3: return "D3";
  }
  throw ConfigError("unknown representation");
}

inline Representation parse_representation(const std::string& s) {
  if (s == "D1") return Representation::D1;
  if (s == "D2") return Representation::D2;
  if (s == "D3") return Representation::D3;
  throw ConfigError("unknown representation: " + s + " (expected D1, D2 or D3)");
}

struct DatasetBuildConfig {
  Representation repr = Representation::D1;
  DateFamily date_family = DateFamily::CONTINUOUS;
  int lag_depth = 90;                           // D2
  bool lag_indicator_columns = false;           // D2: also lag forward-filled columns
  std::vector<std::string> indicator_sources;   // D3; empty = every instrument
};

struct FeatureMatrix {
  Representation repr = Representation::D1;
  DateFamily date_family = DateFamily::CONTINUOUS;
  std::vector<Date> dates;
  std::vector<std::string> names;
  std::vector<std::string> categories;  // parallel to names
  Matrix X;
  std::vector<int> labels;
  std::vector<Date> dropped_dates;

  std::size_t feature_index(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return i;
    }
    throw DataError("feature matrix has no column '" + name + "'");
  }
};

// Assembles one of the three representations from a transformed panel.
// Labels are defined over consecutive panel rows before any drop; rows are
// then dropped when flagged pre-closure, when any feature is undefined
// (indicator warm-up, missing lag history), or at the final date.
inline FeatureMatrix build_dataset(const AlignedPanel& panel, const DatasetBuildConfig& config) {
  const std::size_t n = panel.dates.size();
  if (n < 2) throw DataError("build_dataset: panel has fewer than 2 rows");
  if (config.repr == Representation::D2 &&
      n < static_cast<std::size_t>(config.lag_depth) + 1) {
    throw DataError("build_dataset: D2 needs more than " + std::to_string(config.lag_depth) +
                    " panel days, got " + std::to_string(n));
  }

  struct Col {
    std::string name;
    std::string category;
    const std::vector<double>* borrowed = nullptr;
    std::vector<double> owned;
    std::size_t first_defined = 0;
    const std::vector<double>& values() const { return borrowed ? *borrowed : owned; }
  };
  std::vector<Col> cols;

  for (const auto& pc : panel.columns) {
    Col c;
    c.name = pc.name;
    c.category = pc.category;
    c.borrowed = &pc.values;
    cols.push_back(std::move(c));
  }

  DateColumns date_cols = encode_dates(panel.dates, config.date_family);
  for (std::size_t i = 0; i < date_cols.names.size(); ++i) {
    Col c;
    c.name = date_cols.names[i];
    c.category = "date";
    c.owned = std::move(date_cols.values[i]);
    cols.push_back(std::move(c));
  }

  if (config.repr == Representation::D2) {
    std::set<std::string> instrument_set(panel.instrument_ids.begin(),
                                         panel.instrument_ids.end());
    for (const auto& pc : panel.columns) {
      const bool is_instrument_col = instrument_set.count(pc.category) > 0;
      if (!is_instrument_col && !config.lag_indicator_columns) continue;
      for (int k = 1; k <= config.lag_depth; ++k) {
        Col c;
        c.name = pc.name + "_lag" + std::to_string(k);
        c.category = pc.category;
        c.first_defined = static_cast<std::size_t>(k);
        c.owned.assign(n, detail::kUndefined);
        for (std::size_t t = k; t < n; ++t) c.owned[t] = pc.values[t - k];
        cols.push_back(std::move(c));
      }
    }
  }

  if (config.repr == Representation::D3) {
    std::vector<std::string> sources =
        config.indicator_sources.empty() ? panel.instrument_ids : config.indicator_sources;
    const auto catalog = indicator_catalog();
    for (const auto& src : sources) {
      const auto& high = panel.column(src + "_high").values;
      const auto& low = panel.column(src + "_low").values;
      const auto& close = panel.column(src + "_close").values;
      const auto& volume = panel.column(src + "_volume").values;
      for (const auto& spec : catalog) {
        const std::size_t warm = indicator_warm_up(spec);
        Col c;
        c.name = spec.name(src);
        c.category = src;
        c.first_defined = warm;
        c.owned = compute_indicator_values(spec, high, low, close, volume);
        cols.push_back(std::move(c));
      }
    }
  }

  {
    std::set<std::string> seen;
    for (const auto& c : cols) {
      if (!seen.insert(c.name).second) {
        throw DataError("build_dataset: duplicate feature name " + c.name);
      }
    }
  }

  const auto& close = panel.column(panel.target_instrument + "_close").values;
  const std::vector<int> labels = build_target(close);

  FeatureMatrix out;
  out.repr = config.repr;
  out.date_family = config.date_family;
  for (const auto& c : cols) {
    out.names.push_back(c.name);
    out.categories.push_back(c.category);
  }

  std::vector<std::size_t> kept;
  for (std::size_t t = 0; t + 1 < n; ++t) {
    bool ok = panel.pre_closure[t] == 0;
    for (const auto& c : cols) {
      if (!ok) break;
      if (t < c.first_defined || std::isnan(c.values()[t])) ok = false;
    }
    if (ok) {
      kept.push_back(t);
    } else {
      out.dropped_dates.push_back(panel.dates[t]);
    }
  }
  out.dropped_dates.push_back(panel.dates[n - 1]);  // final date: no label

  out.X = Matrix(kept.size(), cols.size());
  out.dates.reserve(kept.size());
  out.labels.reserve(kept.size());
  for (std::size_t r = 0; r < kept.size(); ++r) {
    const std::size_t t = kept[r];
    out.dates.push_back(panel.dates[t]);
    out.labels.push_back(labels[t]);
    for (std::size_t j = 0; j < cols.size(); ++j) out.X(r, j) = cols[j].values()[t];
  }
  return out;
}

// Restricts a matrix to the given dates (which must all be present).
inline FeatureMatrix subset_by_dates(const FeatureMatrix& m, const std::vector<Date>& dates) {
  std::map<Date, std::size_t> index;
  for (std::size_t r = 0; r < m.dates.size(); ++r) index[m.dates[r]] = r;
  FeatureMatrix out;
  out.repr = m.repr;
  out.date_family = m.date_family;
  out.names = m.names;
  out.categories = m.categories;
  out.X = Matrix(dates.size(), m.names.size());
  for (std::size_t r = 0; r < dates.size(); ++r) {
    const auto it = index.find(dates[r]);
    if (it == index.end()) {
      throw DataError("subset_by_dates: date " + dates[r].to_string() + " not in matrix");
    }
    out.dates.push_back(dates[r]);
    out.labels.push_back(m.labels[it->second]);
    for (std::size_t j = 0; j < m.names.size(); ++j) out.X(r, j) = m.X(it->second, j);
  }
  return out;
}

inline std::vector<Date> common_dates(const std::vector<const FeatureMatrix*>& mats) {
  if (mats.empty()) return {};
  std::set<Date> acc(mats[0]->dates.begin(), mats[0]->dates.end());
  for (std::size_t i = 1; i < mats.size(); ++i) {
    std::set<Date> next;
    for (const Date& d : mats[i]->dates) {
      if (acc.count(d)) next.insert(d);
    }
    acc.swap(next);
  }
  return {acc.begin(), acc.end()};
}

// ---------------------------------------------------------------------------
// Persistence: wide CSV plus sidecar metadata.

inline void save_matrix(const FeatureMatrix& m, const std::string& csv_path,
                        const std::string& meta_path, const TransformLedger& ledger) {
  std::string out = "date";
  for (const auto& name : m.names) out += "," + name;
  out += ",label\n";
  for (std::size_t r = 0; r < m.dates.size(); ++r) {
    out += m.dates[r].to_string();
    for (std::size_t j = 0; j < m.names.size(); ++j) out += "," + csv::format_double(m.X(r, j));
    out += "," + std::to_string(m.labels[r]) + "\n";
  }
  csv::write_file(csv_path, out);

  nlohmann::json meta;
  meta["representation"] = representation_name(m.repr);
  meta["date_family"] = date_family_name(m.date_family);
  nlohmann::json cats = nlohmann::json::object();
  for (std::size_t j = 0; j < m.names.size(); ++j) cats[m.names[j]] = m.categories[j];
  meta["column_categories"] = cats;
  meta["transforms"] = ledger.to_json();
  nlohmann::json dropped = nlohmann::json::array();
  for (const Date& d : m.dropped_dates) dropped.push_back(d.to_string());
  meta["dropped_dates"] = dropped;
  csv::write_file(meta_path, meta.dump(2) + "\n");
}

inline FeatureMatrix load_matrix(const std::string& csv_path, const std::string& meta_path) {
  std::ifstream meta_in(meta_path);
  if (!meta_in) throw DataError("cannot open matrix metadata: " + meta_path);
  nlohmann::json meta = nlohmann::json::parse(meta_in);

  FeatureMatrix m;
  m.repr = parse_representation(meta.at("representation").get<std::string>());
  m.date_family = meta.at("date_family").get<std::string>() == "TREE" ? DateFamily::TREE
                                                                      : DateFamily::CONTINUOUS;
  for (const auto& d : meta.at("dropped_dates")) m.dropped_dates.push_back(Date::parse(d));

  std::ifstream in(csv_path);
  if (!in) throw DataError("cannot open matrix: " + csv_path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(csv_path + ": empty file");
  const auto header = csv::split(csv::trim(line));
  if (header.size() < 2 || header.front() != "date" || header.back() != "label") {
    throw ParseError(csv_path + ": bad matrix header");
  }
  const auto& cats = meta.at("column_categories");
  for (std::size_t i = 1; i + 1 < header.size(); ++i) {
    m.names.push_back(header[i]);
    m.categories.push_back(cats.at(header[i]).get<std::string>());
  }

  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = csv::trim(line);
    if (t.empty()) continue;
    const auto fields = csv::split(t);
    const std::string ctx = csv_path + ":" + std::to_string(lineno);
    if (fields.size() != header.size()) throw ParseError(ctx + ": wrong field count");
    m.dates.push_back(Date::parse(fields[0]));
    std::vector<double> row(m.names.size());
    for (std::size_t j = 0; j < m.names.size(); ++j) row[j] = csv::parse_double(fields[j + 1], ctx);
    rows.push_back(std::move(row));
    m.labels.push_back(csv::parse_int(fields.back(), ctx) ? 1 : 0);
  }
  m.X = Matrix(rows.size(), m.names.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t j = 0; j < m.names.size(); ++j) m.X(r, j) = rows[r][j];
  }
  return m;
}

}  // namespace fxlab
