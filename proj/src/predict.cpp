#include "sentcast/predict.hpp"

#include <algorithm>
#include <cmath>

#include "sentcast/common.hpp"
#include "sentcast/csv.hpp"

namespace sentcast {

PredictionSeries predict_series(Forecaster& model, ModelKind kind, const std::string& llm,
                                const WindowSet& ws, const ScalerParams& scaler,
                                const TradingCalendar& cal, CivilDate test_start,
                                CivilDate test_end, std::int64_t batch_size) {
  std::vector<NyMinute> grid = trading_grid(cal, test_start, test_end);
  std::vector<size_t> idx = windows_in_range(ws, test_start, test_end);

  // Coverage: every test minute needs exactly one window ending there.
  std::vector<NyMinute> have;
  have.reserve(idx.size());
  for (size_t i : idx) have.push_back(ws.windows[i].target_ts);
  std::vector<NyMinute> missing;
  for (NyMinute m : grid)
    if (!std::binary_search(have.begin(), have.end(), m)) missing.push_back(m);
  if (!missing.empty()) {
    std::string msg = "predict: no window for " + std::to_string(missing.size()) +
                      " test minute(s):";
    for (size_t i = 0; i < missing.size() && i < 5; ++i) msg += " " + fmt_grid_ts(missing[i]);
    if (missing.size() > 5) msg += " ...";
    throw DataError(msg);
  }
  if (idx.size() != grid.size())
    throw DataError("predict: window count " + std::to_string(idx.size()) +
                    " does not match test grid length " + std::to_string(grid.size()));

  PredictionSeries series;
  series.kind = kind;
  series.llm = llm;
  NoGradGuard ng;
  for (size_t lo = 0; lo < idx.size(); lo += static_cast<size_t>(batch_size)) {
    size_t hi = std::min(idx.size(), lo + static_cast<size_t>(batch_size));
    Tensor pred = model.forward(batch_features(ws, idx, lo, hi), false);
    for (size_t i = lo; i < hi; ++i) {
      const Window& w = ws.windows[idx[i]];
      PredictionEntry e;
      e.target_ts = w.target_ts;
      e.predicted = scaler.inverse_target(pred.value()[i - lo]);
      e.actual = w.y_raw;
      series.entries.push_back(e);
    }
  }
  return series;
}

double series_mse(const PredictionSeries& series) {
  if (series.entries.empty()) throw InputError("series_mse: empty prediction series");
  double acc = 0.0;
  for (const PredictionEntry& e : series.entries) {
    double d = e.predicted - e.actual;
    acc += d * d;
  }
  return acc / static_cast<double>(series.entries.size());
}

void write_predictions_csv(const std::string& path, const PredictionSeries& series) {
  std::vector<std::vector<std::string>> rows;
  for (const PredictionEntry& e : series.entries)
    rows.push_back({fmt_grid_ts(e.target_ts), fmt_roundtrip(e.predicted),
                    fmt_roundtrip(e.actual)});
  write_csv(path, {"target_ts", "predicted", "actual"}, rows);
}

PredictionSeries load_predictions_csv(const std::string& path) {
  CsvTable t = load_csv(path);
  if (t.header != std::vector<std::string>{"target_ts", "predicted", "actual"})
    throw ParseError(path + ": unexpected predictions header");
  PredictionSeries s;
  NyMinute prev = 0;
  for (size_t i = 0; i < t.rows.size(); ++i) {
    PredictionEntry e;
    e.target_ts = parse_grid_ts(t.rows[i][0]);
    e.predicted = parse_double(t.rows[i][1]);
    e.actual = parse_double(t.rows[i][2]);
    if (i > 0 && e.target_ts <= prev)
      throw DataError(path + ": timestamps not strictly increasing at row " +
                      std::to_string(i + 2));
    prev = e.target_ts;
    s.entries.push_back(e);
  }
  return s;
}

}  // namespace sentcast
