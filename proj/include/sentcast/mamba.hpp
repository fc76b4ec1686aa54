#pragma once

#include <cstdint>
#include <vector>

#include "sentcast/tensor.hpp"

namespace sentcast {

struct MambaConfig {
  std::int64_t d_model = 128;
  std::int64_t d_state = 16;
  std::int64_t d_conv = 4;
  std::int64_t expand = 2;
  std::int64_t input_dim = 10;

  std::int64_t d_inner() const { return expand * d_model; }
  std::int64_t dt_rank() const { return (d_model + 15) / 16; }
};

// h[t] = exp(dt*A) * h[t-1] + dt * B[t] * x[t];  y[t,c] = sum_s C[t,s] h[t,c,s] + D[c] x[t,c].
// Rows are a batch of independent seq_len segments; state resets at segment starts.
// dt: R x d_inner (strictly positive), a: d_inner x d_state (negative for stability),
// b, c: R x d_state, d: [d_inner], x: R x d_inner.
Tensor selective_scan(const Tensor& dt, const Tensor& a, const Tensor& b, const Tensor& c,
                      const Tensor& d, const Tensor& x, std::int64_t seq_len);

class MambaModel {
 public:
  MambaModel(MambaConfig cfg, std::uint64_t seed);

  // u: (N*seq_len) x d_model -> same shape
  Tensor block(const Tensor& u, std::int64_t seq_len);
  // batch: (N*seq_len) x input_dim -> N x 1 (head on each window's last step)
  Tensor forward(const Tensor& batch, std::int64_t seq_len);

  std::vector<Parameter>& params() { return params_; }
  const MambaConfig& config() const { return cfg_; }

 private:
  MambaConfig cfg_;
  Tensor in_w_, in_b_, xz_w_, xz_b_, conv_k_, conv_b_, bcd_w_, bcd_b_;
  Tensor dt_w_, dt_b_, a_log_, dd_, out_w_, out_b_, head_w_, head_b_;
  std::vector<Parameter> params_;
};

}  // namespace sentcast
