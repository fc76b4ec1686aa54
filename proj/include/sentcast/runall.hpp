#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sentcast/config.hpp"
#include "sentcast/dataset.hpp"
#include "sentcast/market_data.hpp"
#include "sentcast/report.hpp"
#include "sentcast/sentiment.hpp"
#include "sentcast/train.hpp"

namespace sentcast {

struct RunOptions {
  std::string out_dir = "out";
  std::uint64_t seed = 7;
  bool mock = false;       // offline hash-based sentiment provider
  bool synthetic = false;  // generated market fixture instead of HTTP sources
  int n_trials = -1;       // -1: 20 normally, 4 under --synthetic
  std::int64_t epochs = 5;
  std::int64_t train_stride = -1;  // -1: 1 normally, smoke defaults under --synthetic
  std::int64_t val_stride = -1;
  std::int64_t retrain_stride = -1;
  int jobs = 1;
  std::vector<std::string> llms;  // names or slugs; empty means all ten
  Config cfg;
};

// Artifact names under out_dir, pure functions of model/llm.
struct RunPaths {
  std::string root;
  explicit RunPaths(std::string r) : root(std::move(r)) {}

  std::string news() const { return root + "/news.csv"; }
  std::string bars() const { return root + "/bars.csv"; }
  std::string sentiment() const { return root + "/sentiment.csv"; }
  std::string scaler() const { return root + "/scaler.json"; }
  std::string dataset(const std::string& slug) const {
    return root + "/dataset_" + slug + ".csv";
  }
  std::string trials(ModelKind k, const std::string& slug) const {
    return root + "/trials_" + model_kind_name(k) + "_" + slug + ".csv";
  }
  std::string checkpoint_bin(ModelKind k, const std::string& slug) const {
    return root + "/checkpoint_" + model_kind_name(k) + "_" + slug + ".bin";
  }
  std::string checkpoint_manifest(ModelKind k, const std::string& slug) const {
    return root + "/checkpoint_" + model_kind_name(k) + "_" + slug + ".json";
  }
  std::string predictions(ModelKind k, const std::string& slug) const {
    return root + "/predictions_" + model_kind_name(k) + "_" + slug + ".csv";
  }
  std::string plot(ModelKind k, const std::string& slug) const {
    return root + "/" + model_kind_name(k) + "_" + slug + ".svg";
  }
  std::string manifest(ModelKind k, const std::string& slug) const {
    return root + "/manifest_" + model_kind_name(k) + "_" + slug + ".json";
  }
  std::string report_csv() const { return root + "/report.csv"; }
  std::string report_md() const { return root + "/report.md"; }
  std::string run_manifest() const { return root + "/run_manifest.json"; }
};

// Mode-dependent defaults (config keys run.trials, run.train_stride_mamba,
// run.train_stride_reformer, run.val_stride override the synthetic smoke
// values; explicit option fields override everything).
int resolved_trials(const RunOptions& opt);
std::int64_t resolved_train_stride(const RunOptions& opt, ModelKind kind);
std::int64_t resolved_retrain_stride(const RunOptions& opt, ModelKind kind);
std::int64_t resolved_val_stride(const RunOptions& opt);
std::vector<LlmSpec> resolved_llms(const RunOptions& opt);
SplitSpec split_from_config(const Config& cfg);

// Pipeline stages; each writes its artifact under out_dir and returns the
// in-memory form so later stages can chain without re-reading.
std::vector<NewsArticle> stage_fetch_news(const RunOptions& opt, const TradingCalendar& cal);
std::vector<MinuteBar> stage_fetch_bars(const RunOptions& opt, const TradingCalendar& cal);
SentimentTable stage_score(const RunOptions& opt, const std::vector<NewsArticle>& articles);

// Interpolated sentiment for one LLM column: align article timestamps onto the
// grid (dropping the ones that land outside it), merge, interpolate.
std::vector<double> sentiment_on_grid(const SentimentTable& table, size_t llm_col,
                                      const std::vector<NewsArticle>& articles,
                                      const std::vector<NyMinute>& grid,
                                      const TradingCalendar& cal);

struct DatasetBundle {
  FeatureTable table;
  ScalerParams scaler;
  std::vector<std::string> slugs;
  std::vector<std::vector<double>> sentiment_cols;  // aligned with slugs
};

DatasetBundle stage_build_dataset(const RunOptions& opt, const std::vector<MinuteBar>& bars,
                                  const std::vector<NewsArticle>& articles,
                                  const SentimentTable& sent, const TradingCalendar& cal);

struct ModelRunResult {
  ModelKind kind = ModelKind::mamba;
  std::string slug;
  std::string llm_name;
  double usd_mse = 0.0;
  std::vector<double> retrain_epoch_losses;
};

// Tune + retrain + checkpoint + predict + plot + per-run manifest for one
// (model, LLM) pair.
ModelRunResult run_one(const RunOptions& opt, const TradingCalendar& cal, ModelKind kind,
                       const LlmSpec& spec, const WindowSet& ws, const ScalerParams& scaler);

// The whole pipeline; returns the final report (also written to report.csv/md).
Report run_all(const RunOptions& opt);

}  // namespace sentcast
