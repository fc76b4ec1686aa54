#include "sentcast/optim.hpp"

#include <cmath>

#include "sentcast/common.hpp"

namespace sentcast {

double xavier_bound(std::int64_t fan_in, std::int64_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

Tensor xavier_uniform(Rng& rng, std::int64_t fan_in, std::int64_t fan_out) {
  double b = xavier_bound(fan_in, fan_out);
  std::vector<double> w(static_cast<size_t>(fan_in * fan_out));
  for (double& x : w) x = rng.uniform(-b, b);
  return Tensor::from({fan_in, fan_out}, std::move(w), true);
}

AdamW::AdamW(std::vector<Parameter> params, AdamWConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  m_.resize(params_.size());
  v_.resize(params_.size());
  for (size_t i = 0; i < params_.size(); ++i) {
    size_t n = params_[i].value.value().size();
    m_[i].assign(n, 0.0);
    v_[i].assign(n, 0.0);
  }
}

void AdamW::step() {
  ++t_;
  double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i].value;
    const std::vector<double>& g = p.grad();
    std::vector<double>& theta = p.mutable_value();
    if (g.size() != theta.size())
      throw InternalError("adamw: parameter '" + params_[i].name + "' has no gradient");
    std::vector<double>& m = m_[i];
    std::vector<double>& v = v_[i];
    for (size_t j = 0; j < theta.size(); ++j) {
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g[j];
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g[j] * g[j];
      double mhat = m[j] / bc1;
      double vhat = v[j] / bc2;
      theta[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps) +
                  cfg_.lr * cfg_.weight_decay * theta[j];
    }
  }
}

void AdamW::zero_grad() {
  for (Parameter& p : params_) p.value.zero_grad();
}

bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace sentcast
