#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "bimlog/util.hpp"

namespace bimlog {

/// Milliseconds elapsed since 0001-01-01T00:00:00, proleptic Gregorian,
/// no timezone offset. This is the unified timeline both log sources are
/// merged on. Note the unit is a millisecond, not the 100 ns tick some
/// platforms use; see README.
using Ticks = std::int64_t;

constexpr Ticks kMsPerSecond = 1000;
constexpr Ticks kMsPerMinute = 60 * kMsPerSecond;
constexpr Ticks kMsPerHour = 60 * kMsPerMinute;
constexpr Ticks kMsPerDay = 24 * kMsPerHour;

struct CivilTime {
  int year = 1;       // >= 1
  int month = 1;      // 1..12
  int day = 1;        // 1..days_in_month
  int hour = 0;       // 0..23
  int minute = 0;     // 0..59
  int second = 0;     // 0..59
  int millisecond = 0;  // 0..999

  friend bool operator==(const CivilTime&, const CivilTime&) = default;
};

constexpr bool is_leap_year(int year) {
  return year % 4 == 0 && (year % 100 != 0 || year % 400 == 0);
}

constexpr int days_in_month(int year, int month) {
  constexpr std::array<int, 12> lengths = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (month == 2 && is_leap_year(year)) return 29;
  return lengths[static_cast<size_t>(month - 1)];
}

namespace detail {

// Era-based civil-date arithmetic (400-year cycles), serial day 0 = 1970-01-01.
constexpr std::int64_t days_from_civil_unix(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

constexpr void civil_from_days_unix(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yy + (m <= 2));
}

// Days between 0001-01-01 and 1970-01-01 in the proleptic Gregorian calendar.
constexpr std::int64_t kUnixEpochDay = -days_from_civil_unix(1, 1, 1);

}  // namespace detail

/// Complete days between 0001-01-01 and the given date.
constexpr std::int64_t days_since_year_one(int year, int month, int day) {
  return detail::days_from_civil_unix(year, month, day) + detail::kUnixEpochDay;
}

inline void validate_civil(const CivilTime& t) {
  if (t.year < 1) throw Error("InvalidDate", "year out of range: " + std::to_string(t.year));
  if (t.month < 1 || t.month > 12)
    throw Error("InvalidDate", "month out of range: " + std::to_string(t.month));
  if (t.day < 1 || t.day > days_in_month(t.year, t.month))
    throw Error("InvalidDate", "day out of range: " + std::to_string(t.day));
  if (t.hour < 0 || t.hour > 23)
    throw Error("InvalidDate", "hour out of range: " + std::to_string(t.hour));
  if (t.minute < 0 || t.minute > 59)
    throw Error("InvalidDate", "minute out of range: " + std::to_string(t.minute));
  if (t.second < 0 || t.second > 59)
    throw Error("InvalidDate", "second out of range: " + std::to_string(t.second));
  if (t.millisecond < 0 || t.millisecond > 999)
    throw Error("InvalidDate", "millisecond out of range: " + std::to_string(t.millisecond));
}

inline Ticks to_ticks(const CivilTime& t) {
  validate_civil(t);
  const std::int64_t days = days_since_year_one(t.year, t.month, t.day);
  const std::int64_t ms_within_day =
      ((static_cast<std::int64_t>(t.hour) * 60 + t.minute) * 60 + t.second) * 1000 + t.millisecond;
  return days * kMsPerDay + ms_within_day;
}

inline CivilTime from_ticks(Ticks ticks) {
  CivilTime t;
  const std::int64_t day = ticks / kMsPerDay;
  std::int64_t rem = ticks % kMsPerDay;
  detail::civil_from_days_unix(day - detail::kUnixEpochDay, t.year, t.month, t.day);
  t.millisecond = static_cast<int>(rem % 1000);
  rem /= 1000;
  t.second = static_cast<int>(rem % 60);
  rem /= 60;
  t.minute = static_cast<int>(rem % 60);
  t.hour = static_cast<int>(rem / 60);
  return t;
}

inline constexpr std::array<std::string_view, 12> kMonthAbbrev = {
    "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};

/// Formats `DD-Mon-YYYY HH:MM:SS.mmm` (the pinned journal culture).
inline std::string format_journal_timestamp(const CivilTime& t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%02d-%.3s-%04d %02d:%02d:%02d.%03d", t.day,
                kMonthAbbrev[static_cast<size_t>(t.month - 1)].data(), t.year, t.hour, t.minute,
                t.second, t.millisecond);
  return buf;
}

/// Formats `YYYY-MM-DDTHH:MM:SS.mmm` (tracker column; informational only).
inline std::string format_iso_timestamp(const CivilTime& t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03d", t.year, t.month, t.day,
                t.hour, t.minute, t.second, t.millisecond);
  return buf;
}

/// Strict parse of `DD-Mon-YYYY HH:MM:SS.mmm`. Returns false on any deviation
/// from the pinned format or an impossible calendar date.
inline bool parse_journal_timestamp(std::string_view s, CivilTime& out) {
  // 25-Jan-2023 10:15:30.123  -> fixed width 24
  if (s.size() != 24) return false;
  auto digits = [&](size_t pos, size_t len, int& value) {
    value = 0;
    for (size_t i = pos; i < pos + len; ++i) {
      if (s[i] < '0' || s[i] > '9') return false;
      value = value * 10 + (s[i] - '0');
    }
    return true;
  };
  CivilTime t;
  if (!digits(0, 2, t.day)) return false;
  if (s[2] != '-' || s[6] != '-' || s[11] != ' ' || s[14] != ':' || s[17] != ':' || s[20] != '.')
    return false;
  std::string_view mon = s.substr(3, 3);
  t.month = 0;
  for (size_t i = 0; i < kMonthAbbrev.size(); ++i) {
    if (mon == kMonthAbbrev[i]) {
      t.month = static_cast<int>(i + 1);
      break;
    }
  }
  if (t.month == 0) return false;
  if (!digits(7, 4, t.year)) return false;
  if (!digits(12, 2, t.hour)) return false;
  if (!digits(15, 2, t.minute)) return false;
  if (!digits(18, 2, t.second)) return false;
  if (!digits(21, 3, t.millisecond)) return false;
  if (t.year < 1 || t.day < 1 || t.day > days_in_month(t.year, t.month)) return false;
  if (t.hour > 23 || t.minute > 59 || t.second > 59) return false;
  out = t;
  return true;
}

}  // namespace bimlog
