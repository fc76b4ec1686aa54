#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "sentcast/dataset.hpp"
#include "sentcast/tensor.hpp"

namespace sentcast {

enum class ModelKind { mamba, reformer };

std::string model_kind_name(ModelKind k);
ModelKind parse_model_kind(const std::string& s);

struct TrainConfig {
  double learning_rate = 1e-5;
  double weight_decay = 1e-6;
  std::int64_t batch_size = 32;
  double lsh_dropout = 0.1;  // reformer only
  std::int64_t epochs = 5;
  std::uint64_t seed = 0;
  bool shuffle = false;  // chronological batches by default
};

// Common face over the two model classes so the trainer and CLI stay generic.
class Forecaster {
 public:
  virtual ~Forecaster() = default;
  virtual Tensor forward(const Tensor& batch, bool training) = 0;
  virtual std::vector<Parameter>& params() = 0;
  virtual std::int64_t seq_len() const = 0;
};

std::unique_ptr<Forecaster> make_forecaster(ModelKind kind, std::int64_t input_dim,
                                            std::int64_t seq_len, double lsh_dropout,
                                            std::uint64_t init_seed);

// Stacks windows idx[lo..hi) into a (count*lookback) x n_cols feature tensor
// (and count x 1 scaled targets).
Tensor batch_features(const WindowSet& ws, const std::vector<size_t>& idx, size_t lo, size_t hi);
Tensor batch_targets(const WindowSet& ws, const std::vector<size_t>& idx, size_t lo, size_t hi);

struct TrainOutput {
  std::vector<double> epoch_losses;  // window-weighted mean scaled MSE per epoch
};

TrainOutput train_model(Forecaster& model, const WindowSet& ws,
                        const std::vector<size_t>& train_idx, const TrainConfig& cfg);

double eval_scaled_mse(Forecaster& model, const WindowSet& ws, const std::vector<size_t>& idx,
                       std::int64_t batch_size = 128);

// Every stride-th element (chronological subsample for quick runs).
std::vector<size_t> stride_indices(const std::vector<size_t>& idx, std::int64_t stride);

}  // namespace sentcast
