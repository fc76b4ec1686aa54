#include "sentcast/runall.hpp"

#include <atomic>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "sentcast/checkpoint.hpp"
#include "sentcast/csv.hpp"
#include "sentcast/plot.hpp"
#include "sentcast/predict.hpp"
#include "sentcast/rng.hpp"
#include "sentcast/synthetic.hpp"
#include "sentcast/tpe.hpp"

namespace sentcast {

namespace {

using nlohmann::json;

// Synthetic smoke defaults: chronological subsampling that keeps two full
// pipelines inside the acceptance budget on one core while leaving enough
// optimizer steps for the loss to fall.
constexpr std::int64_t kSmokeTrainStrideMamba = 128;
constexpr std::int64_t kSmokeTrainStrideReformer = 600;
constexpr std::int64_t kSmokeRetrainStrideMamba = 5;
constexpr std::int64_t kSmokeRetrainStrideReformer = 78;
constexpr std::int64_t kSmokeValStride = 8;

std::mutex g_print_mu;

void say(const std::string& line) {
  std::lock_guard<std::mutex> lk(g_print_mu);
  std::cout << line << "\n" << std::flush;
}

SyntheticFixture fixture_for(const RunOptions& opt, const TradingCalendar& cal) {
  SplitSpec split = split_from_config(opt.cfg);
  int n_articles = static_cast<int>(opt.cfg.get_int("run.articles", 400));
  return make_synthetic_fixture(derive_seed(opt.seed, "fixture"), cal, split.train_start,
                                split.test_end, n_articles);
}

}  // namespace

int resolved_trials(const RunOptions& opt) {
  if (opt.n_trials > 0) return opt.n_trials;
  long long fallback = opt.synthetic ? 4 : 20;
  return static_cast<int>(opt.cfg.get_int("run.trials", fallback));
}

std::int64_t resolved_train_stride(const RunOptions& opt, ModelKind kind) {
  if (opt.train_stride > 0) return opt.train_stride;
  if (!opt.synthetic) return 1;
  if (kind == ModelKind::mamba)
    return opt.cfg.get_int("run.train_stride_mamba", kSmokeTrainStrideMamba);
  return opt.cfg.get_int("run.train_stride_reformer", kSmokeTrainStrideReformer);
}

std::int64_t resolved_retrain_stride(const RunOptions& opt, ModelKind kind) {
  if (opt.retrain_stride > 0) return opt.retrain_stride;
  if (!opt.synthetic) return 1;
  if (kind == ModelKind::mamba)
    return opt.cfg.get_int("run.retrain_stride_mamba", kSmokeRetrainStrideMamba);
  return opt.cfg.get_int("run.retrain_stride_reformer", kSmokeRetrainStrideReformer);
}

std::int64_t resolved_val_stride(const RunOptions& opt) {
  if (opt.val_stride > 0) return opt.val_stride;
  if (!opt.synthetic) return 1;
  return opt.cfg.get_int("run.val_stride", kSmokeValStride);
}

std::vector<LlmSpec> resolved_llms(const RunOptions& opt) {
  std::vector<LlmSpec> specs;
  if (opt.llms.empty()) {
    specs = default_llm_specs();
  } else {
    for (const auto& name : opt.llms) specs.push_back(llm_spec_by_name(name));
  }
  return apply_provider_overrides(std::move(specs), opt.cfg);
}

SplitSpec split_from_config(const Config& cfg) {
  SplitSpec s = SplitSpec::study_default();
  auto date = [&](const std::string& key, CivilDate fallback) {
    return cfg.has(key) ? parse_civil(cfg.require_str(key)) : fallback;
  };
  s.train_start = date("data.train_start", s.train_start);
  s.train_end = date("data.train_end", s.train_end);
  s.val_day = date("data.val_day", s.val_day);
  s.test_start = date("data.test_start", s.test_start);
  s.test_end = date("data.test_end", s.test_end);
  return s;
}

std::vector<NewsArticle> stage_fetch_news(const RunOptions& opt, const TradingCalendar& cal) {
  std::vector<NewsArticle> articles =
      opt.synthetic ? fixture_for(opt, cal).articles : fetch_articles(opt.cfg);
  write_articles_csv(RunPaths(opt.out_dir).news(), articles);
  return articles;
}

std::vector<MinuteBar> stage_fetch_bars(const RunOptions& opt, const TradingCalendar& cal) {
  std::vector<MinuteBar> bars =
      opt.synthetic ? fixture_for(opt, cal).bars : fetch_bars(opt.cfg, cal);
  bars = normalize_bars(std::move(bars));
  for (const auto& b : bars) validate_bar(b, cal);
  write_bars_csv(RunPaths(opt.out_dir).bars(), bars);
  return bars;
}

SentimentTable stage_score(const RunOptions& opt, const std::vector<NewsArticle>& articles) {
  std::vector<LlmSpec> specs = resolved_llms(opt);
  CompletionFn provider = opt.mock ? make_mock_provider() : make_http_provider(opt.cfg);
  int in_flight = static_cast<int>(
      opt.cfg.get_int("sentiment.max_in_flight", opt.mock ? 8 : 50));

  SentimentTable table;
  for (const auto& a : articles) {
    table.article_ids.push_back(a.id);
    table.titles.push_back(a.title);
  }
  table.scores.assign(articles.size(), {});
  for (const auto& spec : specs) {
    say("[score] " + spec.slug);
    std::vector<ScoreResult> results = score_articles(articles, spec, provider, in_flight);
    table.llm_slugs.push_back(spec.slug);
    for (size_t i = 0; i < articles.size(); ++i) table.scores[i].push_back(results[i].score);
  }
  write_sentiment_csv(RunPaths(opt.out_dir).sentiment(), table);
  return table;
}

std::vector<double> sentiment_on_grid(const SentimentTable& table, size_t llm_col,
                                      const std::vector<NewsArticle>& articles,
                                      const std::vector<NyMinute>& grid,
                                      const TradingCalendar& cal) {
  if (grid.empty()) throw InputError("sentiment_on_grid: empty grid");
  std::map<std::string, std::int64_t> published;
  for (const auto& a : articles) published[a.id] = a.published_utc;

  std::vector<std::pair<NyMinute, double>> aligned;
  for (size_t i = 0; i < table.article_ids.size(); ++i) {
    if (llm_col >= table.scores[i].size() || !table.scores[i][llm_col]) continue;
    auto it = published.find(table.article_ids[i]);
    if (it == published.end())
      throw DataError("sentiment row " + table.article_ids[i] + " has no matching article");
    NyMinute m = align_to_trading_minute(utc_to_newyork(it->second), cal);
    if (m < grid.front() || m > grid.back()) continue;  // outside the study range
    aligned.emplace_back(m, *table.scores[i][llm_col]);
  }
  return interpolate_sentiment(merge_sentiment(grid, aligned));
}

DatasetBundle stage_build_dataset(const RunOptions& opt, const std::vector<MinuteBar>& bars,
                                  const std::vector<NewsArticle>& articles,
                                  const SentimentTable& sent, const TradingCalendar& cal) {
  SplitSpec split = split_from_config(opt.cfg);
  RunPaths paths(opt.out_dir);

  DatasetBundle bundle;
  bundle.table = build_feature_table(bars, cal, split.train_start, split.test_end);
  bundle.scaler = fit_scaler(bundle.table, default_feature_columns(), split, 60);
  write_scaler_json(paths.scaler(), bundle.scaler);

  for (size_t col = 0; col < sent.llm_slugs.size(); ++col) {
    std::vector<double> s = sentiment_on_grid(sent, col, articles, bundle.table.ts, cal);
    write_dataset_csv(paths.dataset(sent.llm_slugs[col]), bundle.table, s);
    bundle.slugs.push_back(sent.llm_slugs[col]);
    bundle.sentiment_cols.push_back(std::move(s));
  }
  return bundle;
}

ModelRunResult run_one(const RunOptions& opt, const TradingCalendar& cal, ModelKind kind,
                       const LlmSpec& spec, const WindowSet& ws, const ScalerParams& scaler) {
  RunPaths paths(opt.out_dir);
  SplitSpec split = split_from_config(opt.cfg);
  SplitIndices splits = split_windows(ws, split);

  TuneOptions topt;
  topt.n_trials = resolved_trials(opt);
  topt.epochs = opt.epochs;
  topt.seed = derive_seed(opt.seed, "run." + model_kind_name(kind) + "." + spec.slug);
  topt.train_stride = resolved_train_stride(opt, kind);
  topt.val_stride = resolved_val_stride(opt);
  topt.retrain_stride = resolved_retrain_stride(opt, kind);

  TuneResult tuned = tune_model(kind, ws, splits, topt);
  write_trials_csv(paths.trials(kind, spec.slug), kind, tuned.trials);
  save_checkpoint(paths.checkpoint_bin(kind, spec.slug), paths.checkpoint_manifest(kind, spec.slug),
                  tuned.model->params());

  PredictionSeries series = predict_series(*tuned.model, kind, spec.name, ws, scaler, cal,
                                           split.test_start, split.test_end);
  write_predictions_csv(paths.predictions(kind, spec.slug), series);
  std::string title = (kind == ModelKind::mamba ? "Mamba" : "Reformer");
  title += " / " + spec.name + ": actual vs predicted";
  write_plot_svg(paths.plot(kind, spec.slug), series, title);

  ModelRunResult res;
  res.kind = kind;
  res.slug = spec.slug;
  res.llm_name = spec.name;
  res.usd_mse = series_mse(series);
  res.retrain_epoch_losses = tuned.retrain_epoch_losses;

  json m;
  m["model"] = model_kind_name(kind);
  m["llm"] = spec.slug;
  m["llm_name"] = spec.name;
  m["seed"] = topt.seed;
  m["n_trials"] = topt.n_trials;
  m["epochs"] = topt.epochs;
  m["train_stride"] = topt.train_stride;
  m["val_stride"] = topt.val_stride;
  m["retrain_stride"] = topt.retrain_stride;
  m["best_trial"] = tuned.best_trial;
  json best;
  best["learning_rate"] = tuned.best_cfg.learning_rate;
  best["weight_decay"] = tuned.best_cfg.weight_decay;
  best["batch_size"] = tuned.best_cfg.batch_size;
  if (kind == ModelKind::reformer) best["lsh_dropout"] = tuned.best_cfg.lsh_dropout;
  m["best_config"] = best;
  m["best_val_mse"] = tuned.best_val_mse;
  json trials = json::array();
  for (const auto& t : tuned.trials) {
    json tj;
    tj["trial"] = t.trial;
    tj["learning_rate"] = t.cfg.learning_rate;
    tj["weight_decay"] = t.cfg.weight_decay;
    tj["batch_size"] = t.cfg.batch_size;
    if (kind == ModelKind::reformer) tj["lsh_dropout"] = t.cfg.lsh_dropout;
    tj["val_mse"] = t.val_mse;
    tj["status"] = t.status;
    trials.push_back(tj);
  }
  m["trials"] = trials;
  m["retrain_epoch_losses"] = tuned.retrain_epoch_losses;
  m["usd_mse"] = res.usd_mse;
  m["n_predictions"] = series.entries.size();
  write_file(paths.manifest(kind, spec.slug), m.dump(2) + "\n");
  return res;
}

Report run_all(const RunOptions& opt) {
  std::filesystem::create_directories(opt.out_dir);
  TradingCalendar cal = TradingCalendar::study_default();
  RunPaths paths(opt.out_dir);

  say("[run] fetching inputs");
  std::vector<NewsArticle> articles = stage_fetch_news(opt, cal);
  std::vector<MinuteBar> bars = stage_fetch_bars(opt, cal);
  SentimentTable sent = stage_score(opt, articles);
  say("[run] building datasets");
  DatasetBundle bundle = stage_build_dataset(opt, bars, articles, sent, cal);

  std::vector<LlmSpec> specs = resolved_llms(opt);
  std::vector<WindowSet> windows;
  windows.reserve(specs.size());
  for (size_t i = 0; i < specs.size(); ++i)
    windows.push_back(build_windows(bundle.table, bundle.sentiment_cols[i], bundle.scaler,
                                    default_feature_columns()));

  struct Task {
    ModelKind kind;
    size_t llm;
  };
  std::vector<Task> tasks;
  for (size_t i = 0; i < specs.size(); ++i) {
    tasks.push_back({ModelKind::reformer, i});
    tasks.push_back({ModelKind::mamba, i});
  }
  std::vector<ModelRunResult> results(tasks.size());

  std::atomic<size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex err_mu;
  std::string first_error;
  auto worker = [&]() {
    for (;;) {
      size_t t = next.fetch_add(1);
      if (t >= tasks.size() || failed.load()) return;
      const Task& task = tasks[t];
      std::string label = model_kind_name(task.kind) + "/" + specs[task.llm].slug;
      try {
        say("[run] tuning " + label);
        results[t] =
            run_one(opt, cal, task.kind, specs[task.llm], windows[task.llm], bundle.scaler);
        say("[run] " + label + " test mse " + fmt_g12(results[t].usd_mse));
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (first_error.empty()) first_error = label + ": " + e.what();
        failed.store(true);
        return;
      }
    }
  };
  int jobs = std::max(1, opt.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failed.load()) throw DataError("run failed at " + first_error);

  std::vector<ReportRow> rows;
  for (size_t i = 0; i < specs.size(); ++i) {
    ReportRow row;
    row.llm = specs[i].name;
    for (const auto& r : results)
      if (r.slug == specs[i].slug)
        (r.kind == ModelKind::reformer ? row.reformer_mse : row.mamba_mse) = r.usd_mse;
    rows.push_back(row);
  }
  Report report = make_report(std::move(rows));
  write_file(paths.report_csv(), render_report_csv(report));
  write_file(paths.report_md(), render_report_md(report));

  json rm;
  rm["seed"] = opt.seed;
  rm["mock"] = opt.mock;
  rm["synthetic"] = opt.synthetic;
  rm["n_trials"] = resolved_trials(opt);
  rm["epochs"] = opt.epochs;
  rm["val_stride"] = resolved_val_stride(opt);
  json per_model;
  per_model["mamba"] = resolved_train_stride(opt, ModelKind::mamba);
  per_model["reformer"] = resolved_train_stride(opt, ModelKind::reformer);
  rm["train_stride"] = per_model;
  json per_model_re;
  per_model_re["mamba"] = resolved_retrain_stride(opt, ModelKind::mamba);
  per_model_re["reformer"] = resolved_retrain_stride(opt, ModelKind::reformer);
  rm["retrain_stride"] = per_model_re;
  json llms = json::array();
  for (const auto& s : specs) llms.push_back(s.slug);
  rm["llms"] = llms;
  json hashes;
  for (const auto& slug : bundle.slugs) {
    std::string bytes = read_file(paths.dataset(slug));
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    hashes[slug] = buf;
  }
  rm["dataset_fnv1a64"] = hashes;
  json runs = json::array();
  for (const auto& r : results) {
    json rj;
    rj["model"] = model_kind_name(r.kind);
    rj["llm"] = r.slug;
    rj["usd_mse"] = r.usd_mse;
    runs.push_back(rj);
  }
  rm["runs"] = runs;
  write_file(paths.run_manifest(), rm.dump(2) + "\n");
  say("[run] report written to " + paths.report_csv());
  return report;
}

}  // namespace sentcast
