#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "sentcast/calendar.hpp"
#include "sentcast/indicators.hpp"
#include "sentcast/market_data.hpp"

namespace sentcast {

struct SplitSpec {
  CivilDate train_start{2025, 4, 7};
  CivilDate train_end{2025, 4, 28};
  CivilDate val_day{2025, 4, 29};
  CivilDate test_start{2025, 4, 30};
  CivilDate test_end{2025, 5, 2};
  static SplitSpec study_default() { return {}; }
};

// One row per grid minute over the whole study range; engineered columns are
// fully dense (warm-ups backfilled by the indicator layer).
struct FeatureTable {
  std::vector<NyMinute> ts;
  std::vector<double> close;
  std::vector<double> volume;
  std::vector<double> rsi;
  std::vector<double> roc;
  std::vector<double> delta_close;
  std::vector<double> pct_delta_close;
  std::vector<double> bbw;
  std::vector<double> minute_of_day;
  std::vector<double> minute_offset;
  std::vector<double> min_sin;
  std::vector<double> min_cos;

  size_t rows() const { return ts.size(); }
  const std::vector<double>& column(const std::string& name) const;
};

// Default model input columns (sentiment is appended as the 10th, last).
const std::vector<std::string>& default_feature_columns();

// Bars onto the grid: close forward-fills interior gaps (volume 0); a gap at
// the very start of the grid is a data error.
void grid_align_bars(const std::vector<MinuteBar>& bars, const std::vector<NyMinute>& grid,
                     std::vector<double>& close_out, std::vector<double>& volume_out);

FeatureTable build_feature_table(const std::vector<MinuteBar>& bars,
                                 const TradingCalendar& cal, CivilDate start, CivilDate end);

// --- sentiment on the grid -------------------------------------------------

// Article minutes must already be aligned; several articles in one minute
// average.  Returns one optional per grid row.
std::vector<std::optional<double>> merge_sentiment(
    const std::vector<NyMinute>& grid,
    const std::vector<std::pair<NyMinute, double>>& aligned_scores);

// Linear interpolation between known grid indices; 0.5 before the first known
// value, hold after the last.
std::vector<double> interpolate_sentiment(const std::vector<std::optional<double>>& sparse);

// --- scaling ----------------------------------------------------------------

struct MinMax {
  double min = 0.0;
  double max = 0.0;
};

struct ScalerParams {
  std::vector<std::string> feature_names;
  std::vector<MinMax> feature_ranges;
  MinMax target;
  std::string fit_start;  // training range, for provenance checks
  std::string fit_end;

  double transform_value(size_t col, double v) const;
  double transform_target(double y) const;
  double inverse_target(double y_scaled) const;
};

// Feature ranges come from all training-range rows; the target range from the
// training windows' targets (rows >= lookback inside the training range).
ScalerParams fit_scaler(const FeatureTable& table, const std::vector<std::string>& columns,
                        const SplitSpec& split, int lookback);

void write_scaler_json(const std::string& path, const ScalerParams& scaler);
ScalerParams load_scaler_json(const std::string& path);

// --- windows ----------------------------------------------------------------

struct Window {
  size_t start_row;   // features rows [start_row, start_row+lookback)
  size_t target_row;  // start_row + lookback
  NyMinute target_ts;
  double y_scaled;
  double y_raw;
};

struct WindowSet {
  int lookback = 60;
  int n_cols = 10;                // engineered columns + sentiment (last)
  size_t n_rows = 0;
  std::vector<double> features;   // scaled, row-major n_rows x n_cols
  std::vector<double> closes;     // raw closes per row (for reporting)
  std::vector<NyMinute> ts;       // per row
  std::vector<Window> windows;    // stride-1, crossing day boundaries

  const double* row(size_t r) const { return features.data() + r * n_cols; }
};

WindowSet build_windows(const FeatureTable& table, const std::vector<double>& sentiment,
                        const ScalerParams& scaler, const std::vector<std::string>& columns,
                        int lookback = 60);

// Window indices whose target timestamp falls on [start, end].
std::vector<size_t> windows_in_range(const WindowSet& set, CivilDate start, CivilDate end);

struct SplitIndices {
  std::vector<size_t> train, val, test;
};
SplitIndices split_windows(const WindowSet& set, const SplitSpec& spec);

// --- dataset files ----------------------------------------------------------

void write_dataset_csv(const std::string& path, const FeatureTable& table,
                       const std::vector<double>& sentiment);

struct LoadedDataset {
  FeatureTable table;
  std::vector<double> sentiment;
};
LoadedDataset load_dataset_csv(const std::string& path);

}  // namespace sentcast
