#pragma once

#include <cstdint>
#include <vector>

#include "sentcast/rng.hpp"
#include "sentcast/tensor.hpp"

namespace sentcast {

// Uniform in [-b, b], b = sqrt(6 / (fan_in + fan_out)).
Tensor xavier_uniform(Rng& rng, std::int64_t fan_in, std::int64_t fan_out);
double xavier_bound(std::int64_t fan_in, std::int64_t fan_out);

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

// Decoupled weight decay: theta -= lr * mhat / (sqrt(vhat) + eps) + lr * wd * theta.
class AdamW {
 public:
  AdamW(std::vector<Parameter> params, AdamWConfig cfg);

  void step();
  void zero_grad();
  const std::vector<Parameter>& params() const { return params_; }
  std::int64_t step_count() const { return t_; }

 private:
  std::vector<Parameter> params_;
  AdamWConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  std::int64_t t_ = 0;
};

bool all_finite(const std::vector<double>& v);

}  // namespace sentcast
