#pragma once

#include <vector>

#include "sentcast/calendar.hpp"

namespace sentcast {

// All indicator series are positionally aligned with the input closes.
// Positions before an indicator's warm-up are filled with the first defined
// value so downstream windows never see holes.

// 100 - 100/(1+RS), RS = mean(gain)/mean(loss) over the trailing `period`
// changes; all-gain windows read 100, all-loss 0, flat windows 50.
std::vector<double> rsi(const std::vector<double>& closes, int period = 14);

// 100 * (close[t] - close[t-period]) / close[t-period].
std::vector<double> roc(const std::vector<double>& closes, int period = 10);

struct DeltaSeries {
  std::vector<double> delta;      // close[t] - close[t-1], first entry 0
  std::vector<double> pct_delta;  // 100 * delta / close[t-1], first entry 0
};
DeltaSeries deltas(const std::vector<double>& closes);

// Bollinger band width: 2*k*sigma / SMA, population sigma over the window.
std::vector<double> bbw(const std::vector<double>& closes, int period = 20, double k = 2.0);

struct TemporalEncoding {
  int minute_of_day;  // 60*hour + minute, NY local
  int minute_offset;  // minutes since 09:30, 0..389
  double min_sin;     // sin(2*pi*offset/390)
  double min_cos;
};
TemporalEncoding temporal_encodings(NyMinute ts, const TradingCalendar& cal);

}  // namespace sentcast
