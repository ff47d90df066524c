#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace odcmp {

// Calendar dates are days since 1970-01-01; months are year*12 + (month-1).
// Both are plain ints so they pack into keys and compare cheaply.

int32_t parse_date(std::string_view s);           // "YYYY-MM-DD", throws DataError bad-date
int32_t parse_datetime_day(std::string_view s);   // "YYYY-MM-DD[ T]hh:mm:ss...", date part only
int32_t parse_month(std::string_view s);          // "YYYY-MM", throws DataError bad-month
std::string format_date(int32_t day);
std::string format_month(int32_t month);

struct DateRange {
  int32_t start = 0;
  int32_t end = 0;  // inclusive
  bool contains(int32_t day) const { return day >= start && day <= end; }
  int32_t size() const { return end - start + 1; }
};

struct MonthRange {
  int32_t start = 0;
  int32_t end = 0;  // inclusive
  bool contains(int32_t month) const { return month >= start && month <= end; }
  int32_t size() const { return end - start + 1; }
};

DateRange parse_date_range(std::string_view s);    // "YYYY-MM-DD..YYYY-MM-DD"
MonthRange parse_month_range(std::string_view s);  // "YYYY-MM..YYYY-MM"

}  // namespace odcmp
