#pragma once

#include <compare>
#include <cstdint>
#include <cstdio>
#include <string>

#include "fxlab/errors.hpp"

namespace fxlab {

// Calendar date at day resolution, stored as days since 1970-01-01.
// Civil conversions follow the standard proleptic-Gregorian algorithms.
class Date {
 public:
  Date() : serial_(0) {}
  explicit Date(std::int64_t serial) : serial_(serial) {}

  Date(int year, int month, int day) : serial_(days_from_civil(year, month, day)) {
    if (month < 1 || month > 12 || day < 1 || day > days_in_month(year, month)) {
      throw ValidationError("invalid calendar date " + pad4(year) + "-" + pad2(month) + "-" +
                            pad2(day));
    }
  }

  static Date parse(const std::string& text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
      throw ParseError("bad date '" + text + "' (want YYYY-MM-DD)");
    }
    for (int i : {0, 1, 2, 3, 5, 6, 8, 9}) {
      if (text[i] < '0' || text[i] > '9') throw ParseError("bad date '" + text + "'");
    }
    int y = std::stoi(text.substr(0, 4));
    int m = std::stoi(text.substr(5, 2));
    int d = std::stoi(text.substr(8, 2));
    return Date(y, m, d);
  }

  std::int64_t serial() const { return serial_; }

  int year() const { return civil().y; }
  int month() const { return civil().m; }
  int day() const { return civil().d; }

  // Monday = 0 .. Sunday = 6.
  int weekday() const {
    // 1970-01-01 was a Thursday (Monday-based index 3).
    return static_cast<int>(((serial_ % 7) + 7 + 3) % 7);
  }

  int days_in_current_month() const {
    auto c = civil();
    return days_in_month(c.y, c.m);
  }

  std::string to_string() const {
    auto c = civil();
    return pad4(c.y) + "-" + pad2(c.m) + "-" + pad2(c.d);
  }

  Date next_day() const { return Date(serial_ + 1); }
  Date plus_days(std::int64_t n) const { return Date(serial_ + n); }

  friend std::int64_t operator-(Date a, Date b) { return a.serial_ - b.serial_; }
  auto operator<=>(const Date&) const = default;

  static bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

  static int days_in_month(int y, int m) {
    static constexpr int lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap(y)) return 29;
    return lengths[m - 1];
  }

 private:
  struct Civil {
    int y, m, d;
  };

  static std::int64_t days_from_civil(std::int64_t y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
  }

  Civil civil() const {
    std::int64_t z = serial_ + 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    return Civil{static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
  }

  static std::string pad2(int v) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%02d", v);
    return buf;
  }
  static std::string pad4(int v) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d", v);
    return buf;
  }

  std::int64_t serial_;
};

// Inclusive date range.
struct DateRange {
  Date first;
  Date last;

  bool contains(Date d) const { return d >= first && d <= last; }
  std::string to_string() const { return first.to_string() + ".." + last.to_string(); }
};

}  // namespace fxlab
