#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace sentcast {

struct CivilDate {
  int y = 1970;
  unsigned m = 1;
  unsigned d = 1;
  friend bool operator==(const CivilDate&, const CivilDate&) = default;
};

// Days since 1970-01-01 (Howard Hinnant's civil-date algorithms).
std::int64_t days_from_civil(CivilDate cd);
CivilDate civil_from_days(std::int64_t z);
int weekday_from_days(std::int64_t z);  // 0=Sunday .. 6=Saturday

// Timestamps:
//  - UTC instants are epoch seconds.
//  - New-York civil time is represented as seconds (NySec) or minutes
//    (NyMinute) since 1970-01-01 00:00 *on the New-York wall clock*.  Grid
//    timestamps are always NyMinute.
using NySec = std::int64_t;
using NyMinute = std::int64_t;

// US daylight-saving rule (second Sunday in March 02:00 local to first Sunday
// in November 02:00 local), hand-rolled because the toolchain's chrono lacks
// a tzdb.  The whole study window sits inside daylight time (UTC-4).
int ny_utc_offset_seconds(std::int64_t utc_epoch);
NySec utc_to_newyork(std::int64_t utc_epoch);

CivilDate civil_of_ny_minute(NyMinute t);
int minute_of_day_of(NyMinute t);  // 0..1439

struct TradingCalendar {
  int open_minute = 9 * 60 + 30;    // 09:30, first bar stamp
  int close_minute = 16 * 60;       // session end; last bar stamp is 15:59
  std::set<std::int64_t> holidays;  // day numbers

  static TradingCalendar study_default();  // Good Friday 2025-04-18

  bool is_trading_day(CivilDate cd) const;
  int minutes_per_day() const { return close_minute - open_minute; }  // 390
  NyMinute session_open(CivilDate cd) const;
  CivilDate next_trading_day_after(CivilDate cd) const;
};

// Snap a New-York civil timestamp onto the trading-minute grid: in-session
// times truncate to their minute; pre-open times map to the same day's 09:30;
// after-close, weekend, and holiday times map to the next session's 09:30.
NyMinute align_to_trading_minute(NySec ts_ny, const TradingCalendar& cal);

// Concatenated per-day grids over [start, end], 390 stamps per trading day.
std::vector<NyMinute> trading_grid(const TradingCalendar& cal, CivilDate start, CivilDate end);
std::vector<CivilDate> trading_days(const TradingCalendar& cal, CivilDate start, CivilDate end);

// Text formats.
std::int64_t parse_rfc3339(const std::string& s);       // -> UTC epoch seconds
CivilDate parse_civil(const std::string& s);            // "YYYY-MM-DD"
NyMinute parse_grid_ts(const std::string& s);           // "YYYY-MM-DD HH:MM"
std::string fmt_civil(CivilDate cd);
std::string fmt_grid_ts(NyMinute t);

}  // namespace sentcast
