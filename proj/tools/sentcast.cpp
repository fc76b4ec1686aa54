#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sentcast/checkpoint.hpp"
#include "sentcast/csv.hpp"
#include "sentcast/plot.hpp"
#include "sentcast/predict.hpp"
#include "sentcast/rng.hpp"
#include "sentcast/runall.hpp"
#include "sentcast/tpe.hpp"

namespace {

using namespace sentcast;

void require_file(const std::string& path, const std::string& producer) {
  if (!std::filesystem::exists(path))
    throw DependencyError("missing input " + path + " (produce it with `sentcast " + producer +
                          "` first)");
}

Config load_config(const std::string& path) {
  if (path.empty()) return Config();
  require_file(path, "--config points at a key=value file");
  return Config::load(path);
}

struct WindowBundle {
  WindowSet ws;
  ScalerParams scaler;
};

WindowBundle load_windows(const RunPaths& paths, const std::string& slug) {
  require_file(paths.dataset(slug), "build-dataset");
  require_file(paths.scaler(), "build-dataset");
  LoadedDataset loaded = load_dataset_csv(paths.dataset(slug));
  ScalerParams scaler = load_scaler_json(paths.scaler());
  WindowBundle b{build_windows(loaded.table, loaded.sentiment, scaler, default_feature_columns()),
                 std::move(scaler)};
  return b;
}

SentimentTable filter_columns(const SentimentTable& in, const std::vector<LlmSpec>& specs) {
  SentimentTable out;
  out.article_ids = in.article_ids;
  out.titles = in.titles;
  std::vector<size_t> cols;
  for (const auto& spec : specs) {
    auto it = std::find(in.llm_slugs.begin(), in.llm_slugs.end(), spec.slug);
    if (it == in.llm_slugs.end())
      throw DataError("sentiment.csv has no column for " + spec.slug + "; re-run score");
    cols.push_back(static_cast<size_t>(it - in.llm_slugs.begin()));
    out.llm_slugs.push_back(spec.slug);
  }
  out.scores.resize(in.scores.size());
  for (size_t r = 0; r < in.scores.size(); ++r)
    for (size_t c : cols) out.scores[r].push_back(in.scores[r][c]);
  return out;
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case Error::Kind::dependency:
      return 3;
    case Error::Kind::config:
      return 4;
    case Error::Kind::transport:
      return 5;
    case Error::Kind::internal:
      return 9;
    default:
      return 2;  // input / parse / data / dimension
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sentcast: intraday forecasts from minute bars + LLM news sentiment"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 7;
  int jobs = 1;
  app.add_option("--config", config_path, "key=value configuration file");
  app.add_option("--seed", seed, "master seed (default 7)");
  app.add_option("--out-dir", out_dir, "artifact directory (default out/)");
  app.add_option("--jobs", jobs, "worker threads for run-all (default 1)");

  bool mock = false, synthetic = false, shuffle = false;
  int trials = -1;
  std::int64_t epochs = 5, train_stride = -1, val_stride = -1, retrain_stride = -1;
  std::string model_name, llm_name, eval_file;
  std::vector<std::string> llms;
  double lr = 1e-5, weight_decay = 1e-6, dropout = 0.1;
  std::int64_t batch = 32;

  auto make_opts = [&]() {
    RunOptions opt;
    opt.out_dir = out_dir;
    opt.seed = seed;
    opt.mock = mock;
    opt.synthetic = synthetic;
    opt.n_trials = trials;
    opt.epochs = epochs;
    opt.train_stride = train_stride;
    opt.val_stride = val_stride;
    opt.retrain_stride = retrain_stride;
    opt.jobs = jobs;
    opt.llms = llms;
    opt.cfg = load_config(config_path);
    return opt;
  };

  auto* fetch_news = app.add_subcommand("fetch-news", "download (or synthesize) headlines");
  fetch_news->fallthrough();
  fetch_news->add_flag("--synthetic", synthetic, "generate the seeded fixture instead of HTTP");
  fetch_news->callback([&] {
    RunOptions opt = make_opts();
    std::filesystem::create_directories(opt.out_dir);
    auto articles = stage_fetch_news(opt, TradingCalendar::study_default());
    std::cout << "wrote " << articles.size() << " articles to " << RunPaths(opt.out_dir).news()
              << "\n";
  });

  auto* fetch_bars_cmd = app.add_subcommand("fetch-bars", "download (or synthesize) minute bars");
  fetch_bars_cmd->fallthrough();
  fetch_bars_cmd->add_flag("--synthetic", synthetic, "generate the seeded fixture instead of HTTP");
  fetch_bars_cmd->callback([&] {
    RunOptions opt = make_opts();
    std::filesystem::create_directories(opt.out_dir);
    auto bars = stage_fetch_bars(opt, TradingCalendar::study_default());
    std::cout << "wrote " << bars.size() << " bars to " << RunPaths(opt.out_dir).bars() << "\n";
  });

  auto* score = app.add_subcommand("score", "score headlines with the LLM panel");
  score->fallthrough();
  score->add_flag("--mock", mock, "deterministic offline provider");
  score->add_option("--llm", llms, "restrict to named LLMs (repeatable)");
  score->callback([&] {
    RunOptions opt = make_opts();
    RunPaths paths(opt.out_dir);
    require_file(paths.news(), "fetch-news");
    auto articles = load_articles(paths.news());
    SentimentTable table = stage_score(opt, articles);
    std::cout << "scored " << table.article_ids.size() << " articles x "
              << table.llm_slugs.size() << " models -> " << paths.sentiment() << "\n";
  });

  auto* build = app.add_subcommand("build-dataset", "grid features + per-LLM sentiment columns");
  build->fallthrough();
  build->add_option("--llm", llms, "restrict to named LLMs (repeatable)");
  build->callback([&] {
    RunOptions opt = make_opts();
    RunPaths paths(opt.out_dir);
    require_file(paths.bars(), "fetch-bars");
    require_file(paths.news(), "fetch-news");
    require_file(paths.sentiment(), "score");
    TradingCalendar cal = TradingCalendar::study_default();
    auto bars = load_bars(paths.bars(), cal);
    auto articles = load_articles(paths.news());
    SentimentTable sent = load_sentiment_csv(paths.sentiment());
    if (!llms.empty()) sent = filter_columns(sent, resolved_llms(opt));
    DatasetBundle bundle = stage_build_dataset(opt, bars, articles, sent, cal);
    std::cout << "wrote " << bundle.slugs.size() << " dataset files (" << bundle.table.rows()
              << " rows each) + " << paths.scaler() << "\n";
  });

  auto add_model_llm = [&](CLI::App* cmd) {
    cmd->add_option("--model", model_name, "mamba | reformer")->required();
    cmd->add_option("--llm", llm_name, "LLM name or slug")->required();
  };

  auto* tune = app.add_subcommand("tune", "TPE search + retrain on the training range");
  tune->fallthrough();
  add_model_llm(tune);
  tune->add_option("--trials", trials, "TPE trials (default 20)");
  tune->add_option("--epochs", epochs, "epochs per trial (default 5)");
  tune->add_option("--train-stride", train_stride, "train-window subsampling stride");
  tune->add_option("--val-stride", val_stride, "validation subsampling stride");
  tune->add_option("--retrain-stride", retrain_stride, "retrain subsampling stride");
  tune->callback([&] {
    RunOptions opt = make_opts();
    RunPaths paths(opt.out_dir);
    ModelKind kind = parse_model_kind(model_name);
    const LlmSpec& spec = llm_spec_by_name(llm_name);
    WindowBundle b = load_windows(paths, spec.slug);
    SplitIndices splits = split_windows(b.ws, split_from_config(opt.cfg));
    TuneOptions topt;
    topt.n_trials = trials > 0 ? trials : 20;
    topt.epochs = epochs;
    topt.seed = derive_seed(seed, "run." + model_kind_name(kind) + "." + spec.slug);
    topt.train_stride = train_stride > 0 ? train_stride : 1;
    topt.val_stride = val_stride > 0 ? val_stride : 1;
    topt.retrain_stride = retrain_stride;
    TuneResult tuned = tune_model(kind, b.ws, splits, topt);
    write_trials_csv(paths.trials(kind, spec.slug), kind, tuned.trials);
    save_checkpoint(paths.checkpoint_bin(kind, spec.slug),
                    paths.checkpoint_manifest(kind, spec.slug), tuned.model->params());
    std::cout << "best trial " << tuned.best_trial << " val mse " << fmt_g12(tuned.best_val_mse)
              << " lr " << fmt_g12(tuned.best_cfg.learning_rate) << " wd "
              << fmt_g12(tuned.best_cfg.weight_decay) << " batch " << tuned.best_cfg.batch_size
              << "\n";
  });

  auto* train = app.add_subcommand("train", "train once with explicit hyperparameters");
  train->fallthrough();
  add_model_llm(train);
  train->add_option("--lr", lr, "learning rate (default 1e-5)");
  train->add_option("--weight-decay", weight_decay, "decoupled weight decay (default 1e-6)");
  train->add_option("--batch", batch, "batch size (default 32)");
  train->add_option("--dropout", dropout, "LSH attention dropout (reformer, default 0.1)");
  train->add_option("--epochs", epochs, "epochs (default 5)");
  train->add_flag("--shuffle", shuffle, "shuffle windows each epoch (default chronological)");
  train->callback([&] {
    RunOptions opt = make_opts();
    RunPaths paths(opt.out_dir);
    ModelKind kind = parse_model_kind(model_name);
    const LlmSpec& spec = llm_spec_by_name(llm_name);
    WindowBundle b = load_windows(paths, spec.slug);
    SplitIndices splits = split_windows(b.ws, split_from_config(opt.cfg));
    TrainConfig cfg;
    cfg.learning_rate = lr;
    cfg.weight_decay = weight_decay;
    cfg.batch_size = batch;
    cfg.lsh_dropout = dropout;
    cfg.epochs = epochs;
    cfg.seed = derive_seed(seed, "train." + model_kind_name(kind) + "." + spec.slug);
    cfg.shuffle = shuffle;
    auto model = make_forecaster(kind, b.ws.n_cols, b.ws.lookback, dropout,
                                 derive_seed(cfg.seed, "init"));
    TrainOutput out = train_model(*model, b.ws, splits.train, cfg);
    save_checkpoint(paths.checkpoint_bin(kind, spec.slug),
                    paths.checkpoint_manifest(kind, spec.slug), model->params());
    std::cout << "epoch losses:";
    for (double l : out.epoch_losses) std::cout << " " << fmt_g12(l);
    std::cout << "\n";
  });

  auto* predict = app.add_subcommand("predict", "forecast the test days from a checkpoint");
  predict->fallthrough();
  add_model_llm(predict);
  predict->callback([&] {
    RunOptions opt = make_opts();
    RunPaths paths(opt.out_dir);
    ModelKind kind = parse_model_kind(model_name);
    const LlmSpec& spec = llm_spec_by_name(llm_name);
    require_file(paths.checkpoint_bin(kind, spec.slug), "tune (or train)");
    require_file(paths.checkpoint_manifest(kind, spec.slug), "tune (or train)");
    WindowBundle b = load_windows(paths, spec.slug);
    auto model = make_forecaster(kind, b.ws.n_cols, b.ws.lookback, 0.1, 0);
    auto arrays = load_checkpoint(paths.checkpoint_bin(kind, spec.slug),
                                  paths.checkpoint_manifest(kind, spec.slug));
    assign_checkpoint(model->params(), arrays);
    SplitSpec split = split_from_config(opt.cfg);
    PredictionSeries series =
        predict_series(*model, kind, spec.name, b.ws, b.scaler, TradingCalendar::study_default(),
                       split.test_start, split.test_end);
    write_predictions_csv(paths.predictions(kind, spec.slug), series);
    std::string title = (kind == ModelKind::mamba ? "Mamba" : "Reformer");
    title += " / " + spec.name + ": actual vs predicted";
    write_plot_svg(paths.plot(kind, spec.slug), series, title);
    std::cout << series.entries.size() << " forecasts, test mse " << fmt_g12(series_mse(series))
              << " USD^2 -> " << paths.predictions(kind, spec.slug) << "\n";
  });

  auto* evaluate = app.add_subcommand("evaluate", "USD^2 test MSE of stored predictions");
  evaluate->fallthrough();
  evaluate->add_option("--model", model_name, "mamba | reformer");
  evaluate->add_option("--llm", llm_name, "LLM name or slug");
  evaluate->add_option("--file", eval_file, "explicit predictions csv path");
  evaluate->callback([&] {
    RunPaths paths(out_dir);
    std::string path = eval_file;
    if (path.empty()) {
      if (model_name.empty() || llm_name.empty())
        throw InputError("evaluate needs --file or both --model and --llm");
      path = paths.predictions(parse_model_kind(model_name), llm_spec_by_name(llm_name).slug);
    }
    require_file(path, "predict");
    PredictionSeries series = load_predictions_csv(path);
    std::cout << path << ": " << series.entries.size() << " forecasts, mse "
              << fmt_g12(series_mse(series)) << " USD^2\n";
  });

  auto* report_cmd = app.add_subcommand("report", "aggregate per-LLM MSE table");
  report_cmd->fallthrough();
  report_cmd->callback([&] {
    RunPaths paths(out_dir);
    std::vector<ReportRow> rows;
    std::vector<std::string> partial;
    for (const auto& spec : default_llm_specs()) {
      std::string rpath = paths.predictions(ModelKind::reformer, spec.slug);
      std::string mpath = paths.predictions(ModelKind::mamba, spec.slug);
      bool have_r = std::filesystem::exists(rpath);
      bool have_m = std::filesystem::exists(mpath);
      if (have_r && have_m) {
        rows.push_back({spec.name, series_mse(load_predictions_csv(rpath)),
                        series_mse(load_predictions_csv(mpath))});
      } else if (have_r || have_m) {
        partial.push_back(spec.slug);
      }
    }
    for (const auto& slug : partial)
      std::cerr << "warning: " << slug << " has predictions for only one model; skipped\n";
    if (rows.empty())
      std::cerr << "warning: no prediction pairs under " << out_dir << "; emitting empty table\n";
    Report report = make_report(std::move(rows));
    std::filesystem::create_directories(out_dir);
    write_file(paths.report_csv(), render_report_csv(report));
    write_file(paths.report_md(), render_report_md(report));
    std::cout << render_report_md(report);
  });

  auto* runall = app.add_subcommand("run-all", "full pipeline: fetch, score, tune, report");
  runall->fallthrough();
  runall->add_flag("--mock", mock, "deterministic offline sentiment provider");
  runall->add_flag("--synthetic", synthetic, "seeded market fixture instead of HTTP");
  runall->add_option("--trials", trials, "TPE trials per model (default 20; 4 with --synthetic)");
  runall->add_option("--epochs", epochs, "training epochs (default 5)");
  runall->add_option("--train-stride", train_stride, "train-window subsampling stride");
  runall->add_option("--val-stride", val_stride, "validation subsampling stride");
  runall->add_option("--retrain-stride", retrain_stride, "retrain subsampling stride");
  runall->add_option("--llm", llms, "restrict to named LLMs (repeatable)");
  runall->callback([&] {
    Report report = run_all(make_opts());
    std::cout << render_report_md(report);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 9;
  }
  return 0;
}
