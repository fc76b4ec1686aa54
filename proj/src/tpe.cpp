#include "sentcast/tpe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sentcast/common.hpp"
#include "sentcast/csv.hpp"

namespace sentcast {

TpeSpace train_space(ModelKind kind) {
  TpeSpace s;
  s.dims.push_back({ParamDomain::Kind::log_uniform, "learning_rate", 1e-6, 1e-5, {}});
  s.dims.push_back({ParamDomain::Kind::log_uniform, "weight_decay", 1e-6, 1e-5, {}});
  if (kind == ModelKind::mamba) {
    s.dims.push_back({ParamDomain::Kind::categorical, "batch_size", 0, 0, {32, 64, 128}});
  } else {
    s.dims.push_back({ParamDomain::Kind::categorical, "batch_size", 0, 0, {32, 64}});
    s.dims.push_back({ParamDomain::Kind::uniform, "lsh_dropout", 0.10, 0.25, {}});
  }
  return s;
}

TrainConfig config_from_values(ModelKind kind, const std::vector<double>& values,
                               std::int64_t epochs, std::uint64_t seed) {
  size_t want = kind == ModelKind::mamba ? 3 : 4;
  if (values.size() != want) throw InputError("config_from_values: wrong value count");
  TrainConfig cfg;
  cfg.learning_rate = values[0];
  cfg.weight_decay = values[1];
  cfg.batch_size = static_cast<std::int64_t>(values[2]);
  if (kind == ModelKind::reformer) cfg.lsh_dropout = values[3];
  cfg.epochs = epochs;
  cfg.seed = seed;
  return cfg;
}

std::vector<double> values_from_config(ModelKind kind, const TrainConfig& cfg) {
  std::vector<double> v = {cfg.learning_rate, cfg.weight_decay,
                           static_cast<double>(cfg.batch_size)};
  if (kind == ModelKind::reformer) v.push_back(cfg.lsh_dropout);
  return v;
}

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;

double normal_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

// Gaussian KDE truncated to [lo, hi], bandwidth by Scott's rule.
struct Kde1D {
  std::vector<double> centers;
  double h = 1.0;
  double lo = 0.0;
  double hi = 1.0;

  Kde1D(std::vector<double> cs, double lo_, double hi_) : centers(std::move(cs)), lo(lo_), hi(hi_) {
    double n = static_cast<double>(centers.size());
    double mean = std::accumulate(centers.begin(), centers.end(), 0.0) / n;
    double var = 0.0;
    for (double c : centers) var += (c - mean) * (c - mean);
    var /= n;
    h = std::sqrt(var) * std::pow(n, -0.2);
    double floor_h = 1e-3 * (hi - lo);
    if (!(h > floor_h)) h = floor_h;
  }

  double log_density(double x) const {
    double acc = 0.0;
    for (double c : centers) {
      double z = (x - c) / h;
      double trunc = normal_cdf((hi - c) / h) - normal_cdf((lo - c) / h);
      if (trunc < 1e-12) trunc = 1e-12;
      acc += std::exp(-0.5 * z * z) / trunc;
    }
    double norm = static_cast<double>(centers.size()) * h * 2.5066282746310005024;
    return std::log(acc / norm + 1e-300);
  }

  double sample(Rng& rng) const {
    size_t i = static_cast<size_t>(rng.uniform_int(centers.size()));
    for (int tries = 0; tries < 100; ++tries) {
      double x = centers[i] + h * rng.normal();
      if (x >= lo && x <= hi) return x;
    }
    return std::clamp(centers[i], lo, hi);
  }
};

size_t choice_index(const ParamDomain& d, double v) {
  for (size_t i = 0; i < d.choices.size(); ++i)
    if (d.choices[i] == v) return i;
  throw InputError("tpe: value " + std::to_string(v) + " not in categorical domain " + d.name);
}

}  // namespace

TpeSampler::TpeSampler(TpeSpace space, std::uint64_t seed, TpeOptions opt)
    : space_(std::move(space)), rng_(seed), opt_(opt) {
  if (space_.dims.empty()) throw ConfigError("tpe: empty search space");
  for (const ParamDomain& d : space_.dims) {
    bool cat = d.kind == ParamDomain::Kind::categorical;
    if (cat && d.choices.empty()) throw ConfigError("tpe: empty categorical domain " + d.name);
    if (!cat && !(d.lo < d.hi)) throw ConfigError("tpe: empty range for " + d.name);
    if (d.kind == ParamDomain::Kind::log_uniform && d.lo <= 0.0)
      throw ConfigError("tpe: log-uniform domain " + d.name + " needs positive bounds");
  }
}

std::vector<double> TpeSampler::prior_sample() {
  std::vector<double> out;
  for (const ParamDomain& d : space_.dims) {
    switch (d.kind) {
      case ParamDomain::Kind::log_uniform:
        out.push_back(std::exp(rng_.uniform(std::log(d.lo), std::log(d.hi))));
        break;
      case ParamDomain::Kind::uniform:
        out.push_back(rng_.uniform(d.lo, d.hi));
        break;
      case ParamDomain::Kind::categorical:
        out.push_back(d.choices[static_cast<size_t>(rng_.uniform_int(d.choices.size()))]);
        break;
    }
  }
  return out;
}

std::vector<double> TpeSampler::suggest(const std::vector<TpeTrial>& history) {
  size_t n = history.size();
  if (n < static_cast<size_t>(opt_.n_startup)) return prior_sample();

  std::vector<size_t> by_loss(n);
  std::iota(by_loss.begin(), by_loss.end(), 0);
  std::stable_sort(by_loss.begin(), by_loss.end(),
                   [&](size_t a, size_t b) { return history[a].loss < history[b].loss; });
  if (history[by_loss.front()].loss == history[by_loss.back()].loss) return prior_sample();

  size_t n_good = static_cast<size_t>(
      std::ceil(opt_.gamma * static_cast<double>(n)));
  n_good = std::clamp<size_t>(n_good, 1, n - 1);

  size_t ndim = space_.dims.size();
  // Per-dimension density models over the good/bad split.
  std::vector<std::unique_ptr<Kde1D>> good_kde(ndim), bad_kde(ndim);
  std::vector<std::vector<double>> good_cnt(ndim), bad_cnt(ndim);
  for (size_t dim = 0; dim < ndim; ++dim) {
    const ParamDomain& d = space_.dims[dim];
    if (d.kind == ParamDomain::Kind::categorical) {
      good_cnt[dim].assign(d.choices.size(), 0.0);
      bad_cnt[dim].assign(d.choices.size(), 0.0);
      for (size_t r = 0; r < n; ++r) {
        auto& cnt = r < n_good ? good_cnt[dim] : bad_cnt[dim];
        cnt[choice_index(d, history[by_loss[r]].values[dim])] += 1.0;
      }
    } else {
      bool logd = d.kind == ParamDomain::Kind::log_uniform;
      double lo = logd ? std::log(d.lo) : d.lo;
      double hi = logd ? std::log(d.hi) : d.hi;
      std::vector<double> gv, bv;
      for (size_t r = 0; r < n; ++r) {
        double x = history[by_loss[r]].values[dim];
        (r < n_good ? gv : bv).push_back(logd ? std::log(x) : x);
      }
      good_kde[dim] = std::make_unique<Kde1D>(std::move(gv), lo, hi);
      bad_kde[dim] = std::make_unique<Kde1D>(std::move(bv), lo, hi);
    }
  }

  std::vector<double> best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int cand = 0; cand < opt_.n_candidates; ++cand) {
    std::vector<double> values(ndim);
    double score = 0.0;
    for (size_t dim = 0; dim < ndim; ++dim) {
      const ParamDomain& d = space_.dims[dim];
      if (d.kind == ParamDomain::Kind::categorical) {
        // Sample from smoothed good frequencies, score by the density ratio.
        double total = 0.0;
        for (double c : good_cnt[dim]) total += c + 1.0;
        double u = rng_.uniform() * total, running = 0.0;
        size_t pick = d.choices.size() - 1;
        for (size_t i = 0; i < d.choices.size(); ++i) {
          running += good_cnt[dim][i] + 1.0;
          if (u < running) {
            pick = i;
            break;
          }
        }
        values[dim] = d.choices[pick];
        double k = static_cast<double>(d.choices.size());
        double pg = (good_cnt[dim][pick] + 1.0) / (static_cast<double>(n_good) + k);
        double pb = (bad_cnt[dim][pick] + 1.0) / (static_cast<double>(n - n_good) + k);
        score += std::log(pg) - std::log(pb);
      } else {
        bool logd = d.kind == ParamDomain::Kind::log_uniform;
        double x = good_kde[dim]->sample(rng_);
        score += good_kde[dim]->log_density(x) - bad_kde[dim]->log_density(x);
        values[dim] = logd ? std::exp(x) : x;
      }
    }
    if (score > best_score) {
      best_score = score;
      best = std::move(values);
    }
  }
  return best;
}

TuneResult tune_model(ModelKind kind, const WindowSet& ws, const SplitIndices& splits,
                      const TuneOptions& opt) {
  if (opt.n_trials <= 0) throw ConfigError("tune: n_trials must be positive");
  std::vector<size_t> train_idx = stride_indices(splits.train, opt.train_stride);
  std::vector<size_t> val_idx = stride_indices(splits.val, opt.val_stride);

  TpeSampler sampler(train_space(kind), derive_seed(opt.seed, "tpe"));
  std::vector<TpeTrial> history;
  TuneResult result;
  for (int t = 0; t < opt.n_trials; ++t) {
    std::vector<double> values = sampler.suggest(history);
    TrainConfig cfg = config_from_values(kind, values, opt.epochs,
                                         derive_seed(opt.seed, "trial." + std::to_string(t)));
    TrialRecord rec;
    rec.trial = t;
    rec.cfg = cfg;
    try {
      // One shared init across trials: with few trials, validation MSE should
      // rank hyperparameters, not initialization luck.
      auto model = make_forecaster(kind, ws.n_cols, ws.lookback, cfg.lsh_dropout,
                                   derive_seed(opt.seed, "init"));
      train_model(*model, ws, train_idx, cfg);
      rec.val_mse = eval_scaled_mse(*model, ws, val_idx, cfg.batch_size);
      rec.status = "ok";
      history.push_back({values, rec.val_mse});
    } catch (const Error& e) {
      rec.val_mse = std::numeric_limits<double>::quiet_NaN();
      rec.status = std::string("failed: ") + e.what();
    }
    result.trials.push_back(rec);
  }

  for (const TrialRecord& rec : result.trials)
    if (rec.status == "ok" &&
        (result.best_trial < 0 || rec.val_mse < result.trials[result.best_trial].val_mse))
      result.best_trial = rec.trial;
  if (result.best_trial < 0) throw DataError("tune: all trials failed");
  result.best_cfg = result.trials[result.best_trial].cfg;
  result.best_val_mse = result.trials[result.best_trial].val_mse;

  // Retrain on the (possibly less subsampled) training set with the winner.
  std::int64_t rstride = opt.retrain_stride > 0 ? opt.retrain_stride : opt.train_stride;
  std::vector<size_t> retrain_idx =
      rstride == opt.train_stride ? train_idx : stride_indices(splits.train, rstride);
  TrainConfig rcfg = result.best_cfg;
  rcfg.seed = derive_seed(opt.seed, "retrain");
  // Retrain from the same init the trials used: the selected config was
  // validated against exactly this starting point.
  result.model = make_forecaster(kind, ws.n_cols, ws.lookback, rcfg.lsh_dropout,
                                 derive_seed(opt.seed, "init"));
  result.retrain_epoch_losses = train_model(*result.model, ws, retrain_idx, rcfg).epoch_losses;
  return result;
}

void write_trials_csv(const std::string& path, ModelKind kind,
                      const std::vector<TrialRecord>& trials) {
  std::vector<std::string> header = {"trial", "learning_rate", "weight_decay", "batch_size"};
  if (kind == ModelKind::reformer) header.push_back("lsh_dropout");
  header.push_back("val_mse");
  header.push_back("status");
  std::vector<std::vector<std::string>> rows;
  for (const TrialRecord& r : trials) {
    std::vector<std::string> row = {std::to_string(r.trial), fmt_roundtrip(r.cfg.learning_rate),
                                    fmt_roundtrip(r.cfg.weight_decay),
                                    std::to_string(r.cfg.batch_size)};
    if (kind == ModelKind::reformer) row.push_back(fmt_roundtrip(r.cfg.lsh_dropout));
    row.push_back(std::isfinite(r.val_mse) ? fmt_roundtrip(r.val_mse) : "");
    row.push_back(r.status);
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

}  // namespace sentcast
