#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "sentcast/tensor.hpp"

namespace sentcast::testutil {

// Central finite-difference check of d(loss)/d(leaf) for every coordinate of
// every listed leaf.  The analytic backward runs first, then the probe
// forwards run under NoGradGuard, so stateful ops that stage data between
// forward and backward see the calls in their required order.  Returns the
// worst relative error, |analytic - fd| / max(|analytic|, |fd|, 1e-8).
inline double grad_check(const std::function<Tensor()>& loss_fn, std::vector<Tensor> leaves,
                         double eps = 1e-5) {
  for (Tensor& leaf : leaves) {
    leaf.set_requires_grad(true);
    leaf.zero_grad();
  }
  Tensor loss = loss_fn();
  backward(loss);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(leaves.size());
  for (Tensor& leaf : leaves) analytic.push_back(leaf.grad());

  NoGradGuard ng;
  double worst = 0.0;
  for (size_t li = 0; li < leaves.size(); ++li) {
    std::vector<double>& vals = leaves[li].mutable_value();
    for (size_t i = 0; i < vals.size(); ++i) {
      double keep = vals[i];
      vals[i] = keep + eps;
      double up = loss_fn().item();
      vals[i] = keep - eps;
      double down = loss_fn().item();
      vals[i] = keep;
      double fd = (up - down) / (2.0 * eps);
      double a = analytic[li][i];
      double denom = std::max({std::fabs(a), std::fabs(fd), 1e-8});
      worst = std::max(worst, std::fabs(a - fd) / denom);
    }
  }
  return worst;
}

}  // namespace sentcast::testutil
