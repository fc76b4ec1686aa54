#pragma once

#include <string>
#include <vector>

#include "sentcast/dataset.hpp"
#include "sentcast/train.hpp"

namespace sentcast {

struct PredictionEntry {
  NyMinute target_ts;
  double predicted = 0.0;  // USD
  double actual = 0.0;     // USD
};

struct PredictionSeries {
  ModelKind kind = ModelKind::mamba;
  std::string llm;
  std::vector<PredictionEntry> entries;
};

// One forecast per test-grid minute, de-normalized via the training-target
// scaler.  Missing windows (not enough history) raise a coverage error
// listing the absent minutes.
PredictionSeries predict_series(Forecaster& model, ModelKind kind, const std::string& llm,
                                const WindowSet& ws, const ScalerParams& scaler,
                                const TradingCalendar& cal, CivilDate test_start,
                                CivilDate test_end, std::int64_t batch_size = 128);

double series_mse(const PredictionSeries& series);  // USD^2

void write_predictions_csv(const std::string& path, const PredictionSeries& series);
PredictionSeries load_predictions_csv(const std::string& path);

}  // namespace sentcast
