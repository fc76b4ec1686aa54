#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "sentcast/tensor.hpp"

namespace sentcast {

struct ReformerConfig {
  std::int64_t model_dim = 256;
  std::int64_t depth = 3;
  std::int64_t heads = 8;
  std::int64_t bucket_size = 64;
  std::int64_t n_hashes = 1;
  std::int64_t input_dim = 10;
  std::int64_t ff_mult = 4;
  std::int64_t seq_len = 60;  // real window length
  double lsh_dropout = 0.1;

  std::int64_t head_dim() const { return model_dim / heads; }
  // smallest multiple of 2*bucket_size >= seq_len
  std::int64_t padded_len() const {
    std::int64_t unit = 2 * bucket_size;
    return (seq_len + unit - 1) / unit * unit;
  }
  std::int64_t n_buckets() const { return std::max<std::int64_t>(2, padded_len() / bucket_size); }
};

// Appends zero rows so the row count is a multiple of 2*bucket_size; the mask
// flags real rows.
std::pair<Tensor, std::vector<char>> pad_sequence(const Tensor& x, std::int64_t bucket_size);

// id = argmax over concat(x*rot, -x*rot); rot is head_dim x n_buckets/2 row-major.
std::vector<std::int64_t> lsh_bucket_ids(const double* vecs, std::int64_t n,
                                         std::int64_t head_dim, const double* rot,
                                         std::int64_t n_buckets);

struct LshAttentionSpec {
  std::int64_t heads = 1;
  std::int64_t head_dim = 1;
  std::int64_t bucket_size = 1;
  std::int64_t seq_len = 1;      // conceptual padded length L' (multiple of 2*bucket_size)
  std::int64_t real_len = 1;     // real rows per window
  std::int64_t window_rows = 1;  // rows per window in the tensors: real_len or seq_len
  double dropout_rate = 0.0;
  bool training = false;
  std::uint64_t seed = 0;  // dropout substream
};

// Shared-QK bucketed attention.  qk, v: (N*window_rows) x (heads*head_dim).
// Rows past real_len within a window are padding: ignored as inputs, zero as
// outputs.  Per head, positions sort by (bucket id, position) with padding
// last; queries attend within their bucket_size chunk plus the previous
// chunk, causally, excluding self unless nothing else is visible (then the
// query attends itself with weight 1).  rotations: heads * head_dim *
// (n_buckets/2) doubles, per-head blocks.
Tensor lsh_attention(const Tensor& qk, const Tensor& v, const std::vector<double>& rotations,
                     const LshAttentionSpec& spec);

class ReformerModel {
 public:
  ReformerModel(ReformerConfig cfg, std::uint64_t seed);

  // batch: (N*seq_len) x input_dim -> N x 1
  Tensor forward(const Tensor& batch, bool training);
  // One reversible layer: y1 = x1 + Attn(LN(x2)); y2 = x2 + FF(LN(y1)).
  std::pair<Tensor, Tensor> reversible_forward(const Tensor& x1, const Tensor& x2, int layer,
                                               bool training);
  // Exact algebraic inverse (dropout off).
  std::pair<Tensor, Tensor> reversible_inverse(const Tensor& y1, const Tensor& y2, int layer);

  std::vector<Parameter>& params() { return params_; }
  const ReformerConfig& config() const { return cfg_; }
  const std::vector<double>& rotations(int layer) const { return rot_.at(layer); }

 private:
  Tensor attn_block(const Tensor& x2, int layer, bool training);
  Tensor ff_block(const Tensor& y1, int layer);

  ReformerConfig cfg_;
  Tensor in_w_, in_b_, head_w_, head_b_;
  struct Layer {
    Tensor ln_a_g, ln_a_b, qk_w, qk_b, v_w, v_b, out_w, out_b;
    Tensor ln_f_g, ln_f_b, ff1_w, ff1_b, ff2_w, ff2_b;
  };
  std::vector<Layer> layers_;
  std::vector<std::vector<double>> rot_;
  std::vector<Parameter> params_;
  std::uint64_t seed_ = 0;
  std::uint64_t step_ = 0;
};

}  // namespace sentcast
