#include "sentcast/dataset.hpp"

#include <algorithm>
#include <cstdio>

#include <json.hpp>

#include "sentcast/common.hpp"
#include "sentcast/csv.hpp"

namespace sentcast {

const std::vector<double>& FeatureTable::column(const std::string& name) const {
  if (name == "close") return close;
  if (name == "volume") return volume;
  if (name == "rsi") return rsi;
  if (name == "roc") return roc;
  if (name == "delta_close") return delta_close;
  if (name == "pct_delta_close") return pct_delta_close;
  if (name == "bbw") return bbw;
  if (name == "minute_of_day") return minute_of_day;
  if (name == "minute_offset") return minute_offset;
  if (name == "min_sin") return min_sin;
  if (name == "min_cos") return min_cos;
  throw InputError("unknown feature column: '" + name + "'");
}

const std::vector<std::string>& default_feature_columns() {
  static const std::vector<std::string> cols = {
      "rsi", "roc", "delta_close", "pct_delta_close", "bbw",
      "volume", "minute_offset", "min_sin", "min_cos"};
  return cols;
}

void grid_align_bars(const std::vector<MinuteBar>& bars, const std::vector<NyMinute>& grid,
                     std::vector<double>& close_out, std::vector<double>& volume_out) {
  close_out.assign(grid.size(), 0.0);
  volume_out.assign(grid.size(), 0.0);
  size_t b = 0;
  double last_close = 0.0;
  bool have_close = false;
  size_t gaps = 0;
  for (size_t i = 0; i < grid.size(); ++i) {
    while (b < bars.size() && bars[b].ts < grid[i]) ++b;
    if (b < bars.size() && bars[b].ts == grid[i]) {
      last_close = bars[b].close;
      have_close = true;
      close_out[i] = bars[b].close;
      volume_out[i] = static_cast<double>(bars[b].volume);
    } else {
      if (!have_close)
        throw DataError("no bar at or before grid start " + fmt_grid_ts(grid[i]));
      close_out[i] = last_close;  // quiet minute: carry close, zero volume
      volume_out[i] = 0.0;
      ++gaps;
    }
  }
  if (gaps > 0)
    std::fprintf(stderr, "warning: %zu grid minutes had no bar (close carried forward)\n", gaps);
}

FeatureTable build_feature_table(const std::vector<MinuteBar>& bars, const TradingCalendar& cal,
                                 CivilDate start, CivilDate end) {
  FeatureTable t;
  t.ts = trading_grid(cal, start, end);
  if (t.ts.empty()) throw DataError("empty trading grid for the requested range");
  grid_align_bars(bars, t.ts, t.close, t.volume);
  t.rsi = rsi(t.close);
  t.roc = roc(t.close);
  DeltaSeries d = deltas(t.close);
  t.delta_close = std::move(d.delta);
  t.pct_delta_close = std::move(d.pct_delta);
  t.bbw = bbw(t.close);
  t.minute_of_day.reserve(t.ts.size());
  t.minute_offset.reserve(t.ts.size());
  t.min_sin.reserve(t.ts.size());
  t.min_cos.reserve(t.ts.size());
  for (NyMinute ts : t.ts) {
    TemporalEncoding e = temporal_encodings(ts, cal);
    t.minute_of_day.push_back(e.minute_of_day);
    t.minute_offset.push_back(e.minute_offset);
    t.min_sin.push_back(e.min_sin);
    t.min_cos.push_back(e.min_cos);
  }
  return t;
}

std::vector<std::optional<double>> merge_sentiment(
    const std::vector<NyMinute>& grid,
    const std::vector<std::pair<NyMinute, double>>& aligned_scores) {
  std::vector<double> sum(grid.size(), 0.0);
  std::vector<int> count(grid.size(), 0);
  for (const auto& [ts, score] : aligned_scores) {
    auto it = std::lower_bound(grid.begin(), grid.end(), ts);
    if (it == grid.end() || *it != ts)
      throw DataError("sentiment timestamp " + fmt_grid_ts(ts) +
                      " is not a grid minute (alignment bug)");
    size_t idx = static_cast<size_t>(it - grid.begin());
    sum[idx] += score;
    count[idx] += 1;
  }
  std::vector<std::optional<double>> out(grid.size());
  for (size_t i = 0; i < grid.size(); ++i)
    if (count[i] > 0) out[i] = sum[i] / count[i];
  return out;
}

std::vector<double> interpolate_sentiment(const std::vector<std::optional<double>>& sparse) {
  size_t n = sparse.size();
  std::vector<double> out(n, 0.5);
  size_t prev = n;  // index of previous known point, n = none yet
  for (size_t i = 0; i < n; ++i) {
    if (!sparse[i]) continue;
    double v = *sparse[i];
    out[i] = v;
    if (prev == n) {
      // leading region: neutral 0.5 fill (already initialized)
    } else {
      double pv = out[prev];
      double span = static_cast<double>(i - prev);
      for (size_t j = prev + 1; j < i; ++j)
        out[j] = pv + (v - pv) * (static_cast<double>(j - prev) / span);
    }
    prev = i;
  }
  if (prev != n)
    for (size_t j = prev + 1; j < n; ++j) out[j] = out[prev];  // hold the last value
  return out;
}

double ScalerParams::transform_value(size_t col, double v) const {
  const MinMax& r = feature_ranges[col];
  if (r.max == r.min) return 0.0;  // degenerate column rule
  return (v - r.min) / (r.max - r.min);
}

double ScalerParams::transform_target(double y) const {
  if (target.max == target.min) return 0.0;
  return (y - target.min) / (target.max - target.min);
}

double ScalerParams::inverse_target(double y_scaled) const {
  if (target.max == target.min) return target.min;
  return target.min + y_scaled * (target.max - target.min);
}

namespace {

// Row-index range [lo, hi) whose timestamps fall on [start, end].
std::pair<size_t, size_t> row_range(const FeatureTable& t, CivilDate start, CivilDate end) {
  NyMinute lo = days_from_civil(start) * 1440;
  NyMinute hi = (days_from_civil(end) + 1) * 1440;
  auto a = std::lower_bound(t.ts.begin(), t.ts.end(), lo);
  auto b = std::lower_bound(t.ts.begin(), t.ts.end(), hi);
  return {static_cast<size_t>(a - t.ts.begin()), static_cast<size_t>(b - t.ts.begin())};
}

MinMax span_of(const std::vector<double>& v, size_t lo, size_t hi) {
  MinMax r{v[lo], v[lo]};
  for (size_t i = lo; i < hi; ++i) {
    r.min = std::min(r.min, v[i]);
    r.max = std::max(r.max, v[i]);
  }
  return r;
}

}  // namespace

ScalerParams fit_scaler(const FeatureTable& table, const std::vector<std::string>& columns,
                        const SplitSpec& split, int lookback) {
  auto [lo, hi] = row_range(table, split.train_start, split.train_end);
  if (lo >= hi) throw DataError("scaler fit: no rows in the training range");
  ScalerParams s;
  s.feature_names = columns;
  for (const auto& name : columns)
    s.feature_ranges.push_back(span_of(table.column(name), lo, hi));
  size_t first_target = lo + static_cast<size_t>(lookback);
  if (first_target >= hi)
    throw DataError("scaler fit: training range shorter than the lookback window");
  s.target = span_of(table.close, first_target, hi);
  s.fit_start = fmt_civil(split.train_start);
  s.fit_end = fmt_civil(split.train_end);
  return s;
}

void write_scaler_json(const std::string& path, const ScalerParams& s) {
  nlohmann::json j;
  j["fit_range"] = {{"start", s.fit_start}, {"end", s.fit_end}};
  nlohmann::json cols = nlohmann::json::object();
  for (size_t i = 0; i < s.feature_names.size(); ++i)
    cols[s.feature_names[i]] = {{"min", s.feature_ranges[i].min},
                                {"max", s.feature_ranges[i].max}};
  j["features"] = cols;
  j["feature_order"] = s.feature_names;
  j["target"] = {{"min", s.target.min}, {"max", s.target.max}};
  write_file(path, j.dump(2) + "\n");
}

ScalerParams load_scaler_json(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  ScalerParams s;
  try {
    s.fit_start = j.at("fit_range").at("start").get<std::string>();
    s.fit_end = j.at("fit_range").at("end").get<std::string>();
    for (const auto& name : j.at("feature_order")) {
      const auto& mm = j.at("features").at(name.get<std::string>());
      s.feature_names.push_back(name.get<std::string>());
      s.feature_ranges.push_back({mm.at("min").get<double>(), mm.at("max").get<double>()});
    }
    s.target = {j.at("target").at("min").get<double>(), j.at("target").at("max").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return s;
}

WindowSet build_windows(const FeatureTable& table, const std::vector<double>& sentiment,
                        const ScalerParams& scaler, const std::vector<std::string>& columns,
                        int lookback) {
  if (sentiment.size() != table.rows())
    throw DimensionError("sentiment series length " + std::to_string(sentiment.size()) +
                         " != table rows " + std::to_string(table.rows()));
  if (scaler.feature_names != columns)
    throw InputError("scaler was fit on a different column set");

  WindowSet set;
  set.lookback = lookback;
  set.n_cols = static_cast<int>(columns.size()) + 1;
  set.n_rows = table.rows();
  set.ts = table.ts;
  set.closes = table.close;
  set.features.resize(set.n_rows * set.n_cols);
  for (size_t c = 0; c < columns.size(); ++c) {
    const std::vector<double>& src = table.column(columns[c]);
    for (size_t r = 0; r < set.n_rows; ++r)
      set.features[r * set.n_cols + c] = scaler.transform_value(c, src[r]);
  }
  for (size_t r = 0; r < set.n_rows; ++r)
    set.features[r * set.n_cols + columns.size()] = sentiment[r];  // unscaled, last column

  size_t lb = static_cast<size_t>(lookback);
  if (set.n_rows > lb) {
    set.windows.reserve(set.n_rows - lb);
    for (size_t start = 0; start + lb < set.n_rows; ++start) {
      Window w;
      w.start_row = start;
      w.target_row = start + lb;
      w.target_ts = table.ts[w.target_row];
      w.y_raw = table.close[w.target_row];
      w.y_scaled = scaler.transform_target(w.y_raw);
      set.windows.push_back(w);
    }
  }
  return set;
}

std::vector<size_t> windows_in_range(const WindowSet& set, CivilDate start, CivilDate end) {
  NyMinute lo = days_from_civil(start) * 1440;
  NyMinute hi = (days_from_civil(end) + 1) * 1440;
  std::vector<size_t> out;
  for (size_t i = 0; i < set.windows.size(); ++i) {
    NyMinute t = set.windows[i].target_ts;
    if (t >= lo && t < hi) out.push_back(i);
  }
  return out;
}

SplitIndices split_windows(const WindowSet& set, const SplitSpec& spec) {
  SplitIndices s;
  s.train = windows_in_range(set, spec.train_start, spec.train_end);
  s.val = windows_in_range(set, spec.val_day, spec.val_day);
  s.test = windows_in_range(set, spec.test_start, spec.test_end);
  return s;
}

void write_dataset_csv(const std::string& path, const FeatureTable& t,
                       const std::vector<double>& sentiment) {
  if (sentiment.size() != t.rows())
    throw DimensionError("sentiment length does not match table rows");
  std::vector<std::string> header = {"ts", "close", "volume", "rsi", "roc", "delta_close",
                                     "pct_delta_close", "bbw", "minute_of_day", "minute_offset",
                                     "min_sin", "min_cos", "sentiment"};
  std::vector<std::vector<std::string>> rows;
  rows.reserve(t.rows());
  for (size_t r = 0; r < t.rows(); ++r) {
    rows.push_back({fmt_grid_ts(t.ts[r]), fmt_g12(t.close[r]), fmt_g12(t.volume[r]),
                    fmt_g12(t.rsi[r]), fmt_g12(t.roc[r]), fmt_g12(t.delta_close[r]),
                    fmt_g12(t.pct_delta_close[r]), fmt_g12(t.bbw[r]),
                    fmt_g12(t.minute_of_day[r]), fmt_g12(t.minute_offset[r]),
                    fmt_g12(t.min_sin[r]), fmt_g12(t.min_cos[r]), fmt_g12(sentiment[r])});
  }
  write_csv(path, header, rows);
}

LoadedDataset load_dataset_csv(const std::string& path) {
  CsvTable csv = load_csv(path);
  LoadedDataset out;
  FeatureTable& t = out.table;
  size_t c_ts = csv.col("ts");
  struct ColBind {
    const char* name;
    std::vector<double>* dst;
  };
  std::vector<ColBind> binds = {
      {"close", &t.close}, {"volume", &t.volume}, {"rsi", &t.rsi}, {"roc", &t.roc},
      {"delta_close", &t.delta_close}, {"pct_delta_close", &t.pct_delta_close},
      {"bbw", &t.bbw}, {"minute_of_day", &t.minute_of_day},
      {"minute_offset", &t.minute_offset}, {"min_sin", &t.min_sin},
      {"min_cos", &t.min_cos}, {"sentiment", &out.sentiment}};
  std::vector<size_t> idx;
  for (const auto& b : binds) idx.push_back(csv.col(b.name));
  for (size_t i = 0; i < csv.rows.size(); ++i) {
    const auto& r = csv.rows[i];
    try {
      t.ts.push_back(parse_grid_ts(r[c_ts]));
      for (size_t b = 0; b < binds.size(); ++b)
        binds[b].dst->push_back(parse_double(r[idx[b]]));
    } catch (const ParseError& e) {
      throw ParseError(path + " row " + std::to_string(i + 2) + ": " + e.what());
    }
    if (i > 0 && t.ts[i] <= t.ts[i - 1])
      throw DataError(path + ": timestamps not strictly increasing at row " +
                      std::to_string(i + 2));
  }
  return out;
}

}  // namespace sentcast
