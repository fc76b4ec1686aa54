#include "sentcast/indicators.hpp"

#include <cmath>

#include "sentcast/common.hpp"

namespace sentcast {

namespace {

// Fill positions before `first_defined` with the value there (no-op when the
// series is shorter than the warm-up).
void backfill(std::vector<double>& v, size_t first_defined) {
  if (first_defined >= v.size()) return;
  for (size_t i = 0; i < first_defined; ++i) v[i] = v[first_defined];
}

}  // namespace

std::vector<double> rsi(const std::vector<double>& closes, int period) {
  if (period < 1) throw InputError("rsi: period must be positive");
  size_t n = closes.size();
  std::vector<double> out(n, 50.0);
  size_t p = static_cast<size_t>(period);
  for (size_t t = p; t < n; ++t) {
    double gain = 0.0, loss = 0.0;
    for (size_t i = t - p + 1; i <= t; ++i) {
      double ch = closes[i] - closes[i - 1];
      if (ch > 0) gain += ch;
      else loss -= ch;
    }
    if (loss == 0.0 && gain == 0.0) out[t] = 50.0;
    else if (loss == 0.0) out[t] = 100.0;
    else if (gain == 0.0) out[t] = 0.0;
    else {
      double rs = (gain / period) / (loss / period);
      out[t] = 100.0 - 100.0 / (1.0 + rs);
    }
  }
  backfill(out, p);
  return out;
}

std::vector<double> roc(const std::vector<double>& closes, int period) {
  if (period < 1) throw InputError("roc: period must be positive");
  size_t n = closes.size();
  std::vector<double> out(n, 0.0);
  size_t p = static_cast<size_t>(period);
  for (size_t t = p; t < n; ++t)
    out[t] = 100.0 * (closes[t] - closes[t - p]) / closes[t - p];
  backfill(out, p);
  return out;
}

DeltaSeries deltas(const std::vector<double>& closes) {
  size_t n = closes.size();
  DeltaSeries s;
  s.delta.assign(n, 0.0);
  s.pct_delta.assign(n, 0.0);
  for (size_t t = 1; t < n; ++t) {
    s.delta[t] = closes[t] - closes[t - 1];
    s.pct_delta[t] = 100.0 * s.delta[t] / closes[t - 1];
  }
  return s;
}

std::vector<double> bbw(const std::vector<double>& closes, int period, double k) {
  if (period < 1) throw InputError("bbw: period must be positive");
  size_t n = closes.size();
  std::vector<double> out(n, 0.0);
  size_t p = static_cast<size_t>(period);
  for (size_t t = p - 1; t < n; ++t) {
    double mean = 0.0;
    for (size_t i = t + 1 - p; i <= t; ++i) mean += closes[i];
    mean /= period;
    double var = 0.0;
    for (size_t i = t + 1 - p; i <= t; ++i) {
      double d = closes[i] - mean;
      var += d * d;
    }
    var /= period;
    out[t] = 2.0 * k * std::sqrt(var) / mean;
  }
  backfill(out, p - 1);
  return out;
}

TemporalEncoding temporal_encodings(NyMinute ts, const TradingCalendar& cal) {
  TemporalEncoding e;
  e.minute_of_day = minute_of_day_of(ts);
  e.minute_offset = e.minute_of_day - cal.open_minute;
  if (e.minute_offset < 0 || e.minute_offset >= cal.minutes_per_day())
    throw InputError("temporal_encodings: timestamp " + fmt_grid_ts(ts) + " is off-session");
  double angle = 2.0 * 3.14159265358979323846 * e.minute_offset / cal.minutes_per_day();
  e.min_sin = std::sin(angle);
  e.min_cos = std::cos(angle);
  return e;
}

}  // namespace sentcast
