#include "odcmp/dates.hpp"

#include <chrono>

#include "odcmp/error.hpp"

namespace odcmp {

namespace {

bool parse_int(std::string_view s, size_t pos, size_t len, int& out) {
  if (pos + len > s.size()) return false;
  int v = 0;
  for (size_t i = pos; i < pos + len; ++i) {
    char c = s[i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  out = v;
  return true;
}

int32_t ymd_to_day(int y, int m, int d, std::string_view original) {
  using namespace std::chrono;
  year_month_day ymd{year{y}, month{(unsigned)m}, day{(unsigned)d}};
  if (!ymd.ok()) throw DataError("bad-date", "invalid calendar date '" + std::string(original) + "'");
  return (int32_t)sys_days(ymd).time_since_epoch().count();
}

}  // namespace

int32_t parse_date(std::string_view s) {
  int y, m, d;
  if (s.size() != 10 || s[4] != '-' || s[7] != '-' || !parse_int(s, 0, 4, y) ||
      !parse_int(s, 5, 2, m) || !parse_int(s, 8, 2, d)) {
    throw DataError("bad-date", "expected YYYY-MM-DD, got '" + std::string(s) + "'");
  }
  return ymd_to_day(y, m, d, s);
}

int32_t parse_datetime_day(std::string_view s) {
  int y, m, d;
  if (s.size() < 10 || s[4] != '-' || s[7] != '-' || !parse_int(s, 0, 4, y) ||
      !parse_int(s, 5, 2, m) || !parse_int(s, 8, 2, d) ||
      (s.size() > 10 && s[10] != ' ' && s[10] != 'T')) {
    throw DataError("bad-date", "expected datetime starting YYYY-MM-DD, got '" + std::string(s) + "'");
  }
  return ymd_to_day(y, m, d, s);
}

int32_t parse_month(std::string_view s) {
  int y, m;
  if (s.size() != 7 || s[4] != '-' || !parse_int(s, 0, 4, y) || !parse_int(s, 5, 2, m) || m < 1 ||
      m > 12) {
    throw DataError("bad-month", "expected YYYY-MM, got '" + std::string(s) + "'");
  }
  return (int32_t)y * 12 + (m - 1);
}

std::string format_date(int32_t day) {
  using namespace std::chrono;
  year_month_day ymd{sys_days{days{day}}};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", (int)ymd.year(), (unsigned)ymd.month(),
                (unsigned)ymd.day());
  return buf;
}

std::string format_month(int32_t month) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%04d-%02d", month / 12, month % 12 + 1);
  return buf;
}

namespace {

std::pair<std::string_view, std::string_view> split_range(std::string_view s) {
  auto pos = s.find("..");
  if (pos == std::string_view::npos) {
    throw DataError("bad-range", "expected '<start>..<end>', got '" + std::string(s) + "'");
  }
  return {s.substr(0, pos), s.substr(pos + 2)};
}

}  // namespace

DateRange parse_date_range(std::string_view s) {
  auto [a, b] = split_range(s);
  DateRange r{parse_date(a), parse_date(b)};
  if (r.start > r.end) throw DataError("bad-range", "range start after end: '" + std::string(s) + "'");
  return r;
}

MonthRange parse_month_range(std::string_view s) {
  auto [a, b] = split_range(s);
  MonthRange r{parse_month(a), parse_month(b)};
  if (r.start > r.end) throw DataError("bad-range", "range start after end: '" + std::string(s) + "'");
  return r;
}

}  // namespace odcmp
