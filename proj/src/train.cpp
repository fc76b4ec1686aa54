#include "sentcast/train.hpp"

#include <algorithm>
#include <cmath>

#include "sentcast/common.hpp"
#include "sentcast/mamba.hpp"
#include "sentcast/optim.hpp"
#include "sentcast/reformer.hpp"
#include "sentcast/rng.hpp"

namespace sentcast {

std::string model_kind_name(ModelKind k) { return k == ModelKind::mamba ? "mamba" : "reformer"; }

ModelKind parse_model_kind(const std::string& s) {
  if (s == "mamba") return ModelKind::mamba;
  if (s == "reformer") return ModelKind::reformer;
  throw InputError("unknown model kind '" + s + "' (expected mamba or reformer)");
}

namespace {

class MambaForecaster : public Forecaster {
 public:
  MambaForecaster(std::int64_t input_dim, std::int64_t seq_len, std::uint64_t seed)
      : seq_len_(seq_len), model_([&] {
          MambaConfig c;
          c.input_dim = input_dim;
          return c;
        }(), seed) {}
  Tensor forward(const Tensor& batch, bool) override { return model_.forward(batch, seq_len_); }
  std::vector<Parameter>& params() override { return model_.params(); }
  std::int64_t seq_len() const override { return seq_len_; }

 private:
  std::int64_t seq_len_;
  MambaModel model_;
};

class ReformerForecaster : public Forecaster {
 public:
  ReformerForecaster(std::int64_t input_dim, std::int64_t seq_len, double dropout,
                     std::uint64_t seed)
      : model_([&] {
          ReformerConfig c;
          c.input_dim = input_dim;
          c.seq_len = seq_len;
          c.lsh_dropout = dropout;
          return c;
        }(), seed) {}
  Tensor forward(const Tensor& batch, bool training) override {
    return model_.forward(batch, training);
  }
  std::vector<Parameter>& params() override { return model_.params(); }
  std::int64_t seq_len() const override { return model_.config().seq_len; }

 private:
  ReformerModel model_;
};

}  // namespace

std::unique_ptr<Forecaster> make_forecaster(ModelKind kind, std::int64_t input_dim,
                                            std::int64_t seq_len, double lsh_dropout,
                                            std::uint64_t init_seed) {
  if (kind == ModelKind::mamba)
    return std::make_unique<MambaForecaster>(input_dim, seq_len, init_seed);
  return std::make_unique<ReformerForecaster>(input_dim, seq_len, lsh_dropout, init_seed);
}

Tensor batch_features(const WindowSet& ws, const std::vector<size_t>& idx, size_t lo, size_t hi) {
  if (lo >= hi || hi > idx.size()) throw InputError("batch_features: bad index range");
  size_t count = hi - lo;
  size_t lb = static_cast<size_t>(ws.lookback), nc = static_cast<size_t>(ws.n_cols);
  std::vector<double> data(count * lb * nc);
  for (size_t i = 0; i < count; ++i) {
    const Window& w = ws.windows.at(idx[lo + i]);
    std::copy_n(ws.row(w.start_row), lb * nc, data.data() + i * lb * nc);
  }
  return Tensor::from({static_cast<std::int64_t>(count * lb), static_cast<std::int64_t>(nc)},
                      std::move(data));
}

Tensor batch_targets(const WindowSet& ws, const std::vector<size_t>& idx, size_t lo, size_t hi) {
  if (lo >= hi || hi > idx.size()) throw InputError("batch_targets: bad index range");
  std::vector<double> y(hi - lo);
  for (size_t i = lo; i < hi; ++i) y[i - lo] = ws.windows.at(idx[i]).y_scaled;
  return Tensor::from({static_cast<std::int64_t>(hi - lo), 1}, std::move(y));
}

TrainOutput train_model(Forecaster& model, const WindowSet& ws,
                        const std::vector<size_t>& train_idx, const TrainConfig& cfg) {
  if (train_idx.empty()) throw DataError("train: no training windows");
  if (cfg.batch_size <= 0 || cfg.epochs <= 0)
    throw ConfigError("train: batch_size and epochs must be positive");

  AdamWConfig oc;
  oc.lr = cfg.learning_rate;
  oc.weight_decay = cfg.weight_decay;
  AdamW opt(model.params(), oc);

  std::vector<size_t> order = train_idx;
  TrainOutput out;
  for (std::int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle) {
      Rng shuf(derive_seed(cfg.seed, "shuffle." + std::to_string(epoch)));
      for (size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[shuf.uniform_int(i)]);
    }
    double loss_sum = 0.0;
    size_t n_seen = 0;
    for (size_t lo = 0; lo < order.size(); lo += static_cast<size_t>(cfg.batch_size)) {
      size_t hi = std::min(order.size(), lo + static_cast<size_t>(cfg.batch_size));
      Tensor x = batch_features(ws, order, lo, hi);
      Tensor y = batch_targets(ws, order, lo, hi);
      Tensor pred = model.forward(x, true);
      Tensor loss = mse_loss(pred, y);
      double lv = loss.item();
      if (!std::isfinite(lv))
        throw DataError("train: non-finite loss at epoch " + std::to_string(epoch + 1) +
                        ", batch starting at window " + std::to_string(lo) +
                        " (learning rate too high or corrupt data)");
      opt.zero_grad();
      backward(loss);
      opt.step();
      loss_sum += lv * static_cast<double>(hi - lo);
      n_seen += hi - lo;
    }
    out.epoch_losses.push_back(loss_sum / static_cast<double>(n_seen));
  }
  return out;
}

double eval_scaled_mse(Forecaster& model, const WindowSet& ws, const std::vector<size_t>& idx,
                       std::int64_t batch_size) {
  if (idx.empty()) throw DataError("eval: no windows");
  NoGradGuard ng;
  double se = 0.0;
  for (size_t lo = 0; lo < idx.size(); lo += static_cast<size_t>(batch_size)) {
    size_t hi = std::min(idx.size(), lo + static_cast<size_t>(batch_size));
    Tensor pred = model.forward(batch_features(ws, idx, lo, hi), false);
    for (size_t i = lo; i < hi; ++i) {
      double d = pred.value()[i - lo] - ws.windows.at(idx[i]).y_scaled;
      se += d * d;
    }
  }
  return se / static_cast<double>(idx.size());
}

std::vector<size_t> stride_indices(const std::vector<size_t>& idx, std::int64_t stride) {
  if (stride <= 0) throw InputError("stride_indices: stride must be positive");
  std::vector<size_t> out;
  for (size_t i = 0; i < idx.size(); i += static_cast<size_t>(stride)) out.push_back(idx[i]);
  return out;
}

}  // namespace sentcast
