#include "sentcast/calendar.hpp"

#include <cstdio>

#include "sentcast/common.hpp"

namespace sentcast {

std::int64_t days_from_civil(CivilDate cd) {
  std::int64_t y = cd.y;
  unsigned m = cd.m, d = cd.d;
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

CivilDate civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  return {static_cast<int>(y + (m <= 2)), m, d};
}

int weekday_from_days(std::int64_t z) {
  return static_cast<int>(z >= -4 ? (z + 4) % 7 : (z + 5) % 7 + 6);
}

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  return (a % b != 0 && (a < 0) != (b < 0)) ? q - 1 : q;
}

// Day number of the n-th given weekday (0=Sun) of a month.
std::int64_t nth_weekday(int year, unsigned month, int wd, int n) {
  std::int64_t first = days_from_civil({year, month, 1});
  int w = weekday_from_days(first);
  int delta = (wd - w + 7) % 7;
  return first + delta + 7 * (n - 1);
}

}  // namespace

int ny_utc_offset_seconds(std::int64_t utc_epoch) {
  int year = civil_from_days(floor_div(utc_epoch, 86400)).y;
  // DST starts second Sunday of March 02:00 EST = 07:00 UTC,
  // ends first Sunday of November 02:00 EDT = 06:00 UTC.
  std::int64_t dst_start = nth_weekday(year, 3, 0, 2) * 86400 + 7 * 3600;
  std::int64_t dst_end = nth_weekday(year, 11, 0, 1) * 86400 + 6 * 3600;
  bool dst = utc_epoch >= dst_start && utc_epoch < dst_end;
  return dst ? -4 * 3600 : -5 * 3600;
}

NySec utc_to_newyork(std::int64_t utc_epoch) {
  return utc_epoch + ny_utc_offset_seconds(utc_epoch);
}

CivilDate civil_of_ny_minute(NyMinute t) {
  return civil_from_days(floor_div(t, 1440));
}

int minute_of_day_of(NyMinute t) {
  std::int64_t m = t - floor_div(t, 1440) * 1440;
  return static_cast<int>(m);
}

TradingCalendar TradingCalendar::study_default() {
  TradingCalendar cal;
  cal.holidays.insert(days_from_civil({2025, 4, 18}));
  return cal;
}

bool TradingCalendar::is_trading_day(CivilDate cd) const {
  std::int64_t z = days_from_civil(cd);
  int wd = weekday_from_days(z);
  if (wd == 0 || wd == 6) return false;
  return holidays.count(z) == 0;
}

NyMinute TradingCalendar::session_open(CivilDate cd) const {
  return days_from_civil(cd) * 1440 + open_minute;
}

CivilDate TradingCalendar::next_trading_day_after(CivilDate cd) const {
  std::int64_t z = days_from_civil(cd);
  for (int i = 0; i < 3700; ++i) {
    ++z;
    CivilDate next = civil_from_days(z);
    if (is_trading_day(next)) return next;
  }
  throw DataError("no trading day within ten years of " + fmt_civil(cd));
}

NyMinute align_to_trading_minute(NySec ts_ny, const TradingCalendar& cal) {
  NyMinute minute = floor_div(ts_ny, 60);
  CivilDate day = civil_of_ny_minute(minute);
  int mod = minute_of_day_of(minute);
  if (cal.is_trading_day(day)) {
    if (mod >= cal.open_minute && mod < cal.close_minute) return minute;
    if (mod < cal.open_minute) return cal.session_open(day);
  }
  return cal.session_open(cal.next_trading_day_after(day));
}

std::vector<CivilDate> trading_days(const TradingCalendar& cal, CivilDate start, CivilDate end) {
  std::vector<CivilDate> out;
  std::int64_t a = days_from_civil(start), b = days_from_civil(end);
  for (std::int64_t z = a; z <= b; ++z) {
    CivilDate cd = civil_from_days(z);
    if (cal.is_trading_day(cd)) out.push_back(cd);
  }
  return out;
}

std::vector<NyMinute> trading_grid(const TradingCalendar& cal, CivilDate start, CivilDate end) {
  std::vector<NyMinute> out;
  for (CivilDate cd : trading_days(cal, start, end)) {
    NyMinute open = cal.session_open(cd);
    for (int i = 0; i < cal.minutes_per_day(); ++i) out.push_back(open + i);
  }
  return out;
}

std::int64_t parse_rfc3339(const std::string& s) {
  int y, mo, d, h, mi;
  double sec;
  int consumed = 0;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%lf%n", &y, &mo, &d, &h, &mi, &sec, &consumed) != 6 &&
      std::sscanf(s.c_str(), "%4d-%2d-%2d %2d:%2d:%lf%n", &y, &mo, &d, &h, &mi, &sec, &consumed) != 6)
    throw ParseError("bad RFC-3339 timestamp: '" + s + "'");
  std::string rest = s.substr(static_cast<size_t>(consumed));
  int off = 0;
  if (rest == "Z" || rest == "z" || rest.empty()) {
    off = 0;
  } else if ((rest[0] == '+' || rest[0] == '-') && rest.size() == 6 && rest[3] == ':') {
    int oh, om;
    if (std::sscanf(rest.c_str() + 1, "%2d:%2d", &oh, &om) != 2)
      throw ParseError("bad timezone offset: '" + s + "'");
    off = (oh * 3600 + om * 60) * (rest[0] == '-' ? -1 : 1);
  } else {
    throw ParseError("bad timezone suffix: '" + s + "'");
  }
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 ||
      sec < 0 || sec >= 61)
    throw ParseError("timestamp field out of range: '" + s + "'");
  std::int64_t days = days_from_civil({y, static_cast<unsigned>(mo), static_cast<unsigned>(d)});
  return days * 86400 + h * 3600 + mi * 60 + static_cast<std::int64_t>(sec) - off;
}

CivilDate parse_civil(const std::string& s) {
  int y, mo, d;
  char tail;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2d%c", &y, &mo, &d, &tail) != 3 || mo < 1 || mo > 12 ||
      d < 1 || d > 31)
    throw ParseError("bad date: '" + s + "'");
  return {y, static_cast<unsigned>(mo), static_cast<unsigned>(d)};
}

NyMinute parse_grid_ts(const std::string& s) {
  int y, mo, d, h, mi;
  char tail;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2d %2d:%2d%c", &y, &mo, &d, &h, &mi, &tail) != 5 ||
      mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59)
    throw ParseError("bad bar timestamp: '" + s + "'");
  return days_from_civil({y, static_cast<unsigned>(mo), static_cast<unsigned>(d)}) * 1440 +
         h * 60 + mi;
}

std::string fmt_civil(CivilDate cd) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", cd.y, cd.m, cd.d);
  return buf;
}

std::string fmt_grid_ts(NyMinute t) {
  CivilDate cd = civil_of_ny_minute(t);
  int mod = minute_of_day_of(t);
  char buf[48];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02d:%02d", cd.y, cd.m, cd.d, mod / 60, mod % 60);
  return buf;
}

}  // namespace sentcast
