#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fxlab/backtest.hpp"
#include "fxlab/csv.hpp"
#include "fxlab/manifest.hpp"

namespace fxlab {

// One backtested configuration, ready for the report tables and plots.
struct EvalRecord {
  std::string model_label;    // e.g. "svm" or "stack_svm_knn_logistic"
  std::string dataset_label;  // "D1" | "D2" | "D3"
  bool use_pca = false;
  EvalResult result;

  std::string config_label() const {
    return model_label + "__" + dataset_label + "__" + (use_pca ? "pca" : "nopca") + "__" +
           protocol_label(result.protocol);
  }
};

namespace detail {

inline std::string fmt2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline double quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  if (v.size() == 1) return v[0];
  const double pos = p * (v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const double frac = pos - lo;
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] * (1 - frac) + v[lo + 1] * frac;
}

struct Histogram {
  std::vector<double> lo, hi;
  std::vector<std::size_t> count;
};

inline Histogram histogram(const std::vector<double>& values, std::size_t bins = 20) {
  Histogram h;
  if (values.empty()) return h;
  double mn = values[0], mx = values[0];
  for (double v : values) {
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  if (mn == mx) {
    h.lo = {mn};
    h.hi = {mx};
    h.count = {values.size()};
    return h;
  }
  h.lo.resize(bins);
  h.hi.resize(bins);
  h.count.assign(bins, 0);
  const double step = (mx - mn) / bins;
  for (std::size_t b = 0; b < bins; ++b) {
    h.lo[b] = mn + b * step;
    h.hi[b] = b + 1 == bins ? mx : mn + (b + 1) * step;
  }
  for (double v : values) {
    std::size_t b = static_cast<std::size_t>((v - mn) / step);
    if (b >= bins) b = bins - 1;
    ++h.count[b];
  }
  return h;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Hand-rolled SVG, self-contained and timestamp-free.

namespace svg {

inline std::string header(int w, int h, const std::string& title) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) +
         "\" height=\"" + std::to_string(h) + "\" viewBox=\"0 0 " + std::to_string(w) + " " +
         std::to_string(h) +
         "\">\n"
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
         "<text x=\"" +
         std::to_string(w / 2) +
         "\" y=\"18\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" +
         title + "</text>\n";
}

inline std::string line_chart(const std::string& title, const std::vector<double>& ys) {
  const int w = 720, h = 360, ml = 60, mr = 20, mt = 30, mb = 30;
  double mn = ys[0], mx = ys[0];
  for (double y : ys) {
    mn = std::min(mn, y);
    mx = std::max(mx, y);
  }
  if (mn == mx) {
    mn -= 1;
    mx += 1;
  }
  std::string out = header(w, h, title);
  out += "<line x1=\"" + std::to_string(ml) + "\" y1=\"" + std::to_string(h - mb) + "\" x2=\"" +
         std::to_string(w - mr) + "\" y2=\"" + std::to_string(h - mb) +
         "\" stroke=\"black\"/>\n";
  out += "<line x1=\"" + std::to_string(ml) + "\" y1=\"" + std::to_string(mt) + "\" x2=\"" +
         std::to_string(ml) + "\" y2=\"" + std::to_string(h - mb) + "\" stroke=\"black\"/>\n";
  out += "<text x=\"8\" y=\"" + std::to_string(mt + 6) +
         "\" font-family=\"sans-serif\" font-size=\"11\">" + detail::fmt2(mx) + "</text>\n";
  out += "<text x=\"8\" y=\"" + std::to_string(h - mb) +
         "\" font-family=\"sans-serif\" font-size=\"11\">" + detail::fmt2(mn) + "</text>\n";
  out += "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const double x = ml + (w - ml - mr) * (ys.size() == 1 ? 0.5 : i / double(ys.size() - 1));
    const double y = (h - mb) - (h - mt - mb) * (ys[i] - mn) / (mx - mn);
    out += detail::fmt2(x) + "," + detail::fmt2(y) + " ";
  }
  out += "\"/>\n</svg>\n";
  return out;
}

inline std::string histogram_chart(const std::string& title, const detail::Histogram& hist) {
  const int w = 720, h = 360, ml = 60, mr = 20, mt = 30, mb = 40;
  std::size_t peak = 1;
  for (std::size_t c : hist.count) peak = std::max(peak, c);
  std::string out = header(w, h, title);
  const double bw = (w - ml - mr) / double(hist.count.size());
  for (std::size_t b = 0; b < hist.count.size(); ++b) {
    const double bh = (h - mt - mb) * hist.count[b] / double(peak);
    out += "<rect x=\"" + detail::fmt2(ml + b * bw) + "\" y=\"" + detail::fmt2((h - mb) - bh) +
           "\" width=\"" + detail::fmt2(bw * 0.92) + "\" height=\"" + detail::fmt2(bh) +
           "\" fill=\"steelblue\"/>\n";
  }
  if (!hist.lo.empty()) {
    out += "<text x=\"" + std::to_string(ml) + "\" y=\"" + std::to_string(h - 12) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + detail::fmt2(hist.lo.front()) +
           "</text>\n";
    out += "<text x=\"" + std::to_string(w - mr) + "\" y=\"" + std::to_string(h - 12) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
           detail::fmt2(hist.hi.back()) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

inline std::string bar_chart(const std::string& title, const std::vector<std::string>& labels,
                             const std::vector<double>& values) {
  const int w = 720, h = 360, ml = 60, mr = 20, mt = 30, mb = 110;
  double mx = 1e-9;
  for (double v : values) mx = std::max(mx, v);
  std::string out = header(w, h, title);
  const double bw = (w - ml - mr) / double(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double bh = (h - mt - mb) * std::max(values[i], 0.0) / mx;
    const double x = ml + i * bw;
    out += "<rect x=\"" + detail::fmt2(x) + "\" y=\"" + detail::fmt2((h - mb) - bh) +
           "\" width=\"" + detail::fmt2(bw * 0.8) + "\" height=\"" + detail::fmt2(bh) +
           "\" fill=\"darkseagreen\"/>\n";
    out += "<text x=\"" + detail::fmt2(x + bw * 0.4) + "\" y=\"" + std::to_string(h - mb + 10) +
           "\" font-family=\"sans-serif\" font-size=\"9\" text-anchor=\"start\" transform=\"rotate(45 " +
           detail::fmt2(x + bw * 0.4) + " " + std::to_string(h - mb + 10) + ")\">" + labels[i] +
           "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace svg

// ---------------------------------------------------------------------------
// Report emission

inline std::string results_table_csv(std::vector<EvalRecord> records) {
  std::stable_sort(records.begin(), records.end(), [](const EvalRecord& a, const EvalRecord& b) {
    if (a.model_label != b.model_label) return a.model_label < b.model_label;
    if (a.dataset_label != b.dataset_label) return a.dataset_label < b.dataset_label;
    return std::string(protocol_label(a.result.protocol)) <
           std::string(protocol_label(b.result.protocol));
  });
  std::string out = "model,dataset,protocol,accuracy_pct,profit_pct\n";
  for (const EvalRecord& r : records) {
    out += r.model_label + "," + r.dataset_label + "," + protocol_label(r.result.protocol) + "," +
           csv::format_percent_1dp(r.result.accuracy_value) + "," +
           csv::format_percent_1dp(r.result.curve.return_fraction()) + "\n";
  }
  return out;
}

inline std::string profit_csv(const EvalRecord& r) {
  std::string out = "date,factor,value\n";
  for (std::size_t i = 0; i < r.result.test_dates.size(); ++i) {
    out += r.result.test_dates[i].to_string() + "," +
           csv::format_double(r.result.curve.factors[i]) + "," +
           csv::format_double(r.result.curve.value[i + 1]) + "\n";
  }
  return out;
}

inline std::string months_csv(const EvalRecord& r) {
  std::string out = "year,month,days,accuracy_pct,profit_pct\n";
  for (const MonthResult& m : r.result.months) {
    out += std::to_string(m.year) + "," + std::to_string(m.month) + "," +
           std::to_string(m.days) + "," + csv::format_percent_1dp(m.accuracy) + "," +
           csv::format_percent_1dp(m.profit_factor - 1.0) + "\n";
  }
  return out;
}

inline std::string returns_csv(const EvalRecord& r) {
  const detail::Histogram h = detail::histogram(r.result.daily_returns);
  std::string out = "bin_lo,bin_hi,count\n";
  for (std::size_t b = 0; b < h.count.size(); ++b) {
    out += csv::format_double(h.lo[b]) + "," + csv::format_double(h.hi[b]) + "," +
           std::to_string(h.count[b]) + "\n";
  }
  return out;
}

// Fig 6/7 analogue: the spread of accuracy and profit across models, grouped
// by dataset and protocol.
inline std::string distributions_csv(const std::vector<EvalRecord>& records) {
  std::map<std::pair<std::string, std::string>, std::vector<const EvalRecord*>> groups;
  for (const EvalRecord& r : records) {
    groups[{r.dataset_label, protocol_label(r.result.protocol)}].push_back(&r);
  }
  std::string out = "dataset,protocol,metric,min,q1,median,q3,max,mean\n";
  for (const auto& [key, group] : groups) {
    for (const char* metric : {"accuracy_pct", "profit_pct"}) {
      std::vector<double> vals;
      for (const EvalRecord* r : group) {
        vals.push_back(std::string(metric) == "accuracy_pct"
                           ? 100.0 * r->result.accuracy_value
                           : 100.0 * r->result.curve.return_fraction());
      }
      std::vector<double> sorted = vals;
      std::sort(sorted.begin(), sorted.end());
      double mean = 0;
      for (double v : vals) mean += v;
      mean /= vals.size();
      out += key.first + "," + key.second + "," + metric + "," +
             csv::format_percent_1dp(sorted.front() / 100.0) + "," +
             csv::format_percent_1dp(detail::quantile(vals, 0.25) / 100.0) + "," +
             csv::format_percent_1dp(detail::quantile(vals, 0.5) / 100.0) + "," +
             csv::format_percent_1dp(detail::quantile(vals, 0.75) / 100.0) + "," +
             csv::format_percent_1dp(sorted.back() / 100.0) + "," +
             csv::format_percent_1dp(mean / 100.0) + "\n";
    }
  }
  return out;
}

// Writes the full report tree under out_dir: table, per-config curves and
// histograms, distribution summaries, plots, and the run manifest.
inline void emit_report(const std::vector<EvalRecord>& records, const RunManifest& manifest,
                        const std::filesystem::path& out_dir) {
  if (records.empty()) throw ConfigError("report: no evaluation records");
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "plots");

  csv::write_file(out_dir / "table.csv", results_table_csv(records));
  csv::write_file(out_dir / "distributions.csv", distributions_csv(records));

  std::vector<std::string> labels;
  std::vector<double> accs;
  for (const EvalRecord& r : records) {
    const std::string label = r.config_label();
    labels.push_back(label);
    accs.push_back(100.0 * r.result.accuracy_value);
    csv::write_file(out_dir / ("profit_" + label + ".csv"), profit_csv(r));
    csv::write_file(out_dir / ("months_" + label + ".csv"), months_csv(r));
    csv::write_file(out_dir / ("returns_" + label + ".csv"), returns_csv(r));
    csv::write_file(out_dir / "plots" / ("profit_" + label + ".svg"),
                    svg::line_chart("balance: " + label, r.result.curve.value));
    csv::write_file(out_dir / "plots" / ("returns_" + label + ".svg"),
                    svg::histogram_chart("daily returns: " + label,
                                         detail::histogram(r.result.daily_returns)));
  }
  csv::write_file(out_dir / "plots" / "accuracy.svg",
                  svg::bar_chart("test accuracy (%)", labels, accs));
  save_manifest(manifest, out_dir / "manifest.json");
}

}  // namespace fxlab
