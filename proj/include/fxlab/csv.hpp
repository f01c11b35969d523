#pragma once

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fxlab/errors.hpp"

namespace fxlab {
namespace csv {

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string::size_type start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

// Strict double parse; the whole field must be consumed.
inline double parse_double(const std::string& field, const std::string& context) {
  if (field.empty()) throw ParseError(context + ": empty numeric field");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (end != field.c_str() + field.size() || errno == ERANGE) {
    throw ParseError(context + ": bad numeric value '" + field + "'");
  }
  return v;
}

inline long long parse_int(const std::string& field, const std::string& context) {
  if (field.empty()) throw ParseError(context + ": empty integer field");
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(field.c_str(), &end, 10);
  if (end != field.c_str() + field.size() || errno == ERANGE) {
    throw ParseError(context + ": bad integer value '" + field + "'");
  }
  return v;
}

// Shortest decimal text that round-trips the double exactly.
inline std::string format_double(double v) {
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string format_percent_1dp(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", 100.0 * fraction);
  return buf;
}

struct Row {
  std::size_t line_number;  // 1-based, header included
  std::vector<std::string> fields;
};

// Reads a CSV file whose first line must equal `expected_header`.
// Blank lines are skipped.
inline std::vector<Row> read_file(const std::string& path, const std::string& expected_header) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path);
  std::vector<Row> rows;
  std::string line;
  std::size_t lineno = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (!saw_header) {
      if (t != expected_header) {
        throw ParseError(path + ":1: expected header '" + expected_header + "', got '" + t + "'");
      }
      saw_header = true;
      continue;
    }
    rows.push_back(Row{lineno, split(t)});
  }
  if (!saw_header) throw ValidationError(path + ": empty file");
  return rows;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path);
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace csv
}  // namespace fxlab
