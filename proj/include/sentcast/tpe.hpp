#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "sentcast/rng.hpp"
#include "sentcast/train.hpp"

namespace sentcast {

struct ParamDomain {
  enum class Kind { log_uniform, uniform, categorical };
  Kind kind;
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> choices;  // categorical
};

struct TpeSpace {
  std::vector<ParamDomain> dims;
};

// lr/wd log-uniform [1e-6,1e-5]; batch {32,64,128} (mamba) or {32,64}
// (reformer); reformer adds dropout uniform [0.10,0.25].
TpeSpace train_space(ModelKind kind);

TrainConfig config_from_values(ModelKind kind, const std::vector<double>& values,
                               std::int64_t epochs, std::uint64_t seed);
std::vector<double> values_from_config(ModelKind kind, const TrainConfig& cfg);

struct TpeTrial {
  std::vector<double> values;  // aligned with space dims
  double loss = 0.0;
};

struct TpeOptions {
  int n_startup = 10;    // prior samples before the density model kicks in
  double gamma = 0.25;   // good/bad split quantile (ceil, at least one good)
  int n_candidates = 24; // draws from the good density per suggestion
};

class TpeSampler {
 public:
  TpeSampler(TpeSpace space, std::uint64_t seed, TpeOptions opt = {});

  std::vector<double> suggest(const std::vector<TpeTrial>& history);
  const TpeSpace& space() const { return space_; }

 private:
  std::vector<double> prior_sample();

  TpeSpace space_;
  Rng rng_;
  TpeOptions opt_;
};

// --- tuning driver -----------------------------------------------------------

struct TrialRecord {
  int trial = 0;
  TrainConfig cfg;
  double val_mse = 0.0;  // scaled units
  std::string status;    // "ok" or failure reason
};

struct TuneResult {
  std::vector<TrialRecord> trials;
  int best_trial = -1;
  TrainConfig best_cfg;
  double best_val_mse = 0.0;
  std::vector<double> retrain_epoch_losses;
  std::unique_ptr<Forecaster> model;  // retrained on the full training set
};

struct TuneOptions {
  int n_trials = 20;
  std::int64_t epochs = 5;
  std::uint64_t seed = 0;
  std::int64_t train_stride = 1;    // chronological subsampling for quick runs
  std::int64_t val_stride = 1;
  std::int64_t retrain_stride = -1;  // -1: same as train_stride
};

TuneResult tune_model(ModelKind kind, const WindowSet& ws, const SplitIndices& splits,
                      const TuneOptions& opt);

void write_trials_csv(const std::string& path, ModelKind kind,
                      const std::vector<TrialRecord>& trials);

}  // namespace sentcast
