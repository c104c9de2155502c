#pragma once

#include <charconv>
#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace readpath {

using Date = std::chrono::year_month_day;

// Strict YYYY-MM-DD.
inline std::optional<Date> parse_iso_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  auto field = [&](std::size_t pos, std::size_t len, auto& out) {
    const char* first = text.data() + pos;
    const char* last = first + len;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
  };
  if (!field(0, 4, y) || !field(5, 2, m) || !field(8, 2, d)) return std::nullopt;
  const Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!date.ok()) return std::nullopt;
  return date;
}

inline std::string format_iso_date(const Date& date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

inline int year_of(const Date& date) { return static_cast<int>(date.year()); }

inline long days_since_epoch(const Date& date) {
  return std::chrono::sys_days{date}.time_since_epoch().count();
}

// Year plus the fraction of that year elapsed at the start of the day.
inline double decimal_year(const Date& date) {
  using namespace std::chrono;
  const auto start = sys_days{date.year() / January / 1};
  const auto next = sys_days{(date.year() + years{1}) / January / 1};
  const double elapsed = static_cast<double>((sys_days{date} - start).count());
  const double length = static_cast<double>((next - start).count());
  return static_cast<double>(year_of(date)) + elapsed / length;
}

// Calendar year arithmetic; 29 February maps to 28 February in common years.
inline Date add_years(const Date& date, int n) {
  using namespace std::chrono;
  Date shifted = date + years{n};
  if (!shifted.ok()) shifted = shifted.year() / shifted.month() / last;
  return shifted;
}

inline long month_index(const Date& date) {
  return static_cast<long>(year_of(date)) * 12 + static_cast<long>(static_cast<unsigned>(date.month())) - 1;
}

inline Date month_start(long index) {
  using namespace std::chrono;
  const long y = index >= 0 ? index / 12 : (index - 11) / 12;
  const long m = index - y * 12;
  return year{static_cast<int>(y)} / month{static_cast<unsigned>(m + 1)} / day{1};
}

} // namespace readpath
