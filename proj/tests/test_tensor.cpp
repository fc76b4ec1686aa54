#include <cmath>
#include <vector>

#include <doctest.h>

#include "gradcheck.hpp"
#include "sentcast/common.hpp"
#include "sentcast/rng.hpp"
#include "sentcast/tensor.hpp"

using namespace sentcast;
using sentcast::testutil::grad_check;

namespace {

Tensor rand_t(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(static_cast<size_t>(shape_numel(shape)));
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor::from(std::move(shape), std::move(v));
}

// Scalarize with per-element random weights so structural mistakes (a
// transposed gradient, a swapped index) cannot cancel out in a plain sum.
// Weights are derived from wseed alone: grad_check re-invokes the loss
// closure for every finite-difference probe, and each call must see the
// identical loss function.
Tensor weighted_sum(const Tensor& out, std::uint64_t wseed) {
  Rng wr(derive_seed(wseed, "gradcheck.weights"));
  std::vector<double> w(static_cast<size_t>(out.numel()));
  for (double& x : w) x = wr.uniform(-1.0, 1.0);
  return sum(mul(out, Tensor::from(out.shape(), std::move(w))));
}

}  // namespace

TEST_CASE("closed-form activation values") {
  Tensor x = Tensor::from({3}, {0.0, 1.0, -1.0});
  CHECK(silu(x).value()[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(sigmoid(x).value()[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(softplus(x).value()[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(sigmoid(x).value()[1] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-12));
  CHECK(exp(x).value()[2] == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("sigmoid and silu stay finite at extreme inputs") {
  Tensor x = Tensor::from({4}, {-745.0, 745.0, -1e4, 1e4});
  const std::vector<double>& s = sigmoid(x).value();
  CHECK(s[0] == doctest::Approx(0.0).epsilon(1e-300));
  CHECK(s[1] == doctest::Approx(1.0).epsilon(1e-12));
  for (double v : s) CHECK(std::isfinite(v));
  for (double v : silu(x).value()) CHECK(std::isfinite(v));
}

TEST_CASE("matmul identity and hand value") {
  Tensor eye = Tensor::from({2, 2}, {1.0, 0.0, 0.0, 1.0});
  Tensor a = Tensor::from({2, 2}, {3.0, -1.5, 2.0, 0.25});
  const std::vector<double>& out = matmul(eye, a).value();
  for (size_t i = 0; i < 4; ++i) CHECK(out[i] == doctest::Approx(a.value()[i]).epsilon(1e-15));

  Tensor b = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor c = Tensor::from({3, 2}, {7, 8, 9, 10, 11, 12});
  const std::vector<double>& r = matmul(b, c).value();
  CHECK(r[0] == doctest::Approx(58.0));
  CHECK(r[1] == doctest::Approx(64.0));
  CHECK(r[2] == doctest::Approx(139.0));
  CHECK(r[3] == doctest::Approx(154.0));
  CHECK_THROWS_AS((void)matmul(b, b), DimensionError);
}

TEST_CASE("elementwise broadcast rules") {
  Tensor m = Tensor::from({2, 2}, {1, 2, 3, 4});
  Tensor row = Tensor::from({2}, {10, 20});
  const std::vector<double>& s = add(m, row).value();
  CHECK(s[0] == 11.0);
  CHECK(s[1] == 22.0);
  CHECK(s[2] == 13.0);
  CHECK(s[3] == 24.0);

  const std::vector<double>& p = mul(m, Tensor::scalar(3.0)).value();
  CHECK(p[3] == 12.0);
  const std::vector<double>& d = sub(m, row).value();
  CHECK(d[2] == -7.0);
  CHECK_THROWS_AS((void)add(m, Tensor::from({3}, {1, 2, 3})), DimensionError);
  CHECK(scale(m, -2.0).value()[1] == -4.0);
}

TEST_CASE("softmax rows sum to one and constant rows flatten") {
  Rng rng(11);
  Tensor x = rand_t(rng, {5, 7}, -4.0, 4.0);
  const std::vector<double>& sm = softmax_lastdim(x).value();
  for (int r = 0; r < 5; ++r) {
    double s = 0;
    for (int c = 0; c < 7; ++c) s += sm[static_cast<size_t>(r) * 7 + c];
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  Tensor flat = Tensor::full({2, 4}, 3.25);
  for (double v : softmax_lastdim(flat).value()) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("layer_norm normalizes each row before gain/bias") {
  Rng rng(12);
  Tensor x = rand_t(rng, {4, 6}, -5.0, 5.0);
  Tensor gain = Tensor::full({6}, 1.0);
  Tensor bias = Tensor::zeros({6});
  const std::vector<double>& out = layer_norm(x, gain, bias).value();
  for (int r = 0; r < 4; ++r) {
    double mean = 0, var = 0;
    for (int c = 0; c < 6; ++c) mean += out[static_cast<size_t>(r) * 6 + c];
    mean /= 6;
    for (int c = 0; c < 6; ++c) {
      double d = out[static_cast<size_t>(r) * 6 + c] - mean;
      var += d * d;
    }
    var /= 6;
    CHECK(std::fabs(mean) < 1e-9);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("causal conv: current-step tap is identity and output is causal") {
  Rng rng(13);
  Tensor x = rand_t(rng, {10, 3});
  Tensor kernel = Tensor::from({3, 4}, {1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0});
  Tensor bias = Tensor::zeros({3});
  const std::vector<double>& out = causal_depthwise_conv1d(x, kernel, bias, 5).value();
  for (size_t i = 0; i < out.size(); ++i) CHECK(out[i] == doctest::Approx(x.value()[i]).epsilon(1e-15));

  Tensor k2 = rand_t(rng, {3, 4});
  Tensor base = causal_depthwise_conv1d(x, k2, bias, 10);
  std::vector<double> bumped = x.value();
  bumped[7 * 3 + 1] += 5.0;  // t=7; outputs at t<7 must not move
  Tensor probe = causal_depthwise_conv1d(Tensor::from({10, 3}, std::move(bumped)), k2, bias, 10);
  for (size_t i = 0; i < 7 * 3; ++i)
    CHECK(probe.value()[i] == doctest::Approx(base.value()[i]).epsilon(1e-15));
  CHECK(probe.value()[7 * 3 + 1] != doctest::Approx(base.value()[7 * 3 + 1]));
}

TEST_CASE("conv resets at segment starts") {
  Tensor x = Tensor::from({4, 1}, {1, 1, 1, 1});
  Tensor kernel = Tensor::from({1, 2}, {0.0, 1.0});  // previous-step tap
  Tensor bias = Tensor::zeros({1});
  const std::vector<double>& joint = causal_depthwise_conv1d(x, kernel, bias, 4).value();
  CHECK(joint[0] == 0.0);
  CHECK(joint[2] == 1.0);
  const std::vector<double>& split = causal_depthwise_conv1d(x, kernel, bias, 2).value();
  CHECK(split[2] == 0.0);  // second segment restarts with empty history
  CHECK(split[3] == 1.0);
}

TEST_CASE("gather, scatter, slice, concat, transpose values") {
  Tensor x = Tensor::from({3, 2}, {1, 2, 3, 4, 5, 6});
  const std::vector<double>& g = gather_rows(x, {2, 0}).value();
  CHECK(g[0] == 5.0);
  CHECK(g[3] == 2.0);

  const std::vector<double>& sc = scatter_rows(x, {1, 3, 0}, 4).value();
  CHECK(sc[1 * 2 + 0] == 1.0);
  CHECK(sc[3 * 2 + 1] == 4.0);
  CHECK(sc[0 * 2 + 0] == 5.0);
  CHECK(sc[2 * 2 + 0] == 0.0);

  Tensor t = transpose(x);
  CHECK(t.shape()[0] == 2);
  CHECK(t.value()[1] == 3.0);
  CHECK(t.value()[5] == 6.0);

  Tensor left = slice(x, 0, 0, 2);
  CHECK(left.rows() == 2);
  CHECK(left.value()[3] == 4.0);
  Tensor col = slice(x, 1, 1, 2);
  CHECK(col.value()[0] == 2.0);
  CHECK(col.value()[2] == 6.0);

  Tensor back = concat({slice(x, 0, 0, 1), slice(x, 0, 1, 3)}, 0);
  for (size_t i = 0; i < 6; ++i) CHECK(back.value()[i] == x.value()[i]);
  Tensor wide = concat({x, x}, 1);
  CHECK(wide.cols() == 4);
  CHECK(wide.value()[2] == 1.0);
  CHECK(wide.value()[3] == 2.0);
}

TEST_CASE("reductions and losses") {
  Tensor x = Tensor::from({2, 2}, {1, 2, 3, 4});
  CHECK(sum(x).item() == 10.0);
  CHECK(mean(x).item() == 2.5);
  Tensor pred = Tensor::from({2}, {1.0, 2.0});
  Tensor tgt = Tensor::zeros({2});
  CHECK(mse_loss(pred, tgt).item() == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(mse_loss(pred, pred).item() == 0.0);
}

TEST_CASE("linear matches matmul plus bias") {
  Rng rng(14);
  Tensor x = rand_t(rng, {4, 3});
  Tensor w = rand_t(rng, {3, 2});
  Tensor b = rand_t(rng, {2});
  const std::vector<double>& a = linear(x, w, b).value();
  const std::vector<double>& m = add(matmul(x, w), b).value();
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(m[i]).epsilon(1e-15));
}

TEST_CASE("backward basics: ones, zero, accumulation") {
  Tensor p = Tensor::from({3}, {1.0, -2.0, 0.5}, true);
  backward(sum(p));
  for (double g : p.grad()) CHECK(g == 1.0);

  p.zero_grad();
  backward(mse_loss(p, p));
  for (double g : p.grad()) CHECK(g == 0.0);

  p.zero_grad();
  backward(sum(mul(p, p)));  // two uses of p: both paths accumulate to 2p
  for (size_t i = 0; i < 3; ++i)
    CHECK(p.grad()[i] == doctest::Approx(2.0 * p.value()[i]).epsilon(1e-12));

  backward(sum(p));  // leaf grads accumulate across backward calls
  CHECK(p.grad()[0] == doctest::Approx(2.0 * p.value()[0] + 1.0).epsilon(1e-12));

  CHECK_THROWS_AS(backward(p), InputError);  // non-scalar loss
}

TEST_CASE("NoGradGuard suspends graph building") {
  Tensor p = Tensor::from({2}, {1.0, 2.0}, true);
  {
    NoGradGuard ng;
    CHECK_FALSE(grad_enabled());
    Tensor y = mul(p, p);
    CHECK_FALSE(y.requires_grad());
  }
  CHECK(grad_enabled());
  CHECK(mul(p, p).requires_grad());
}

TEST_CASE("gradcheck: every primitive against central differences") {
  for (std::uint64_t seed : {1, 2, 3}) {
    Rng rng(seed * 977 + 5);

    Tensor a = rand_t(rng, {3, 4});
    Tensor b = rand_t(rng, {4, 2});
    CHECK(grad_check([&] { return weighted_sum(matmul(a, b), seed); }, {a, b}) < 1e-6);

    Tensor c = rand_t(rng, {3, 4});
    Tensor row = rand_t(rng, {4});
    CHECK(grad_check([&] { return weighted_sum(add(a, c), seed); }, {a, c}) < 1e-6);
    CHECK(grad_check([&] { return weighted_sum(sub(a, row), seed); }, {a, row}) < 1e-6);
    CHECK(grad_check([&] { return weighted_sum(mul(a, row), seed); }, {a, row}) < 1e-6);
    Tensor sc = Tensor::scalar(rng.uniform(0.5, 1.5));
    CHECK(grad_check([&] { return weighted_sum(mul(a, sc), seed); }, {a, sc}) < 1e-6);
    CHECK(grad_check([&] { return weighted_sum(scale(a, -1.7), seed); }, {a}) < 1e-6);

    CHECK(grad_check([&] { return weighted_sum(exp(a), seed); }, {a}) < 1e-6);
    CHECK(grad_check([&] { return weighted_sum(softplus(a), seed); }, {a}) < 1e-6);
    CHECK(grad_check([&] { return weighted_sum(sigmoid(a), seed); }, {a}) < 1e-6);
    CHECK(grad_check([&] { return weighted_sum(silu(a), seed); }, {a}) < 1e-6);
    CHECK(grad_check([&] { return weighted_sum(gelu(a), seed); }, {a}) < 1e-6);
    CHECK(grad_check([&] { return weighted_sum(softmax_lastdim(a), seed); }, {a}) < 1e-6);

    Tensor gain = rand_t(rng, {4}, 0.5, 1.5);
    Tensor bias = rand_t(rng, {4});
    CHECK(grad_check([&] { return weighted_sum(layer_norm(a, gain, bias), seed); },
                     {a, gain, bias}) < 1e-6);

    Tensor cx = rand_t(rng, {8, 3});
    Tensor ck = rand_t(rng, {3, 4});
    Tensor cb = rand_t(rng, {3});
    CHECK(grad_check([&] { return weighted_sum(causal_depthwise_conv1d(cx, ck, cb, 4), seed); },
                     {cx, ck, cb}) < 1e-6);

    CHECK(grad_check([&] { return weighted_sum(gather_rows(a, {2, 0, 2}), seed); }, {a}) < 1e-6);
    CHECK(grad_check([&] { return weighted_sum(scatter_rows(a, {4, 1, 0}, 6), seed); }, {a}) < 1e-6);
    CHECK(grad_check([&] { return weighted_sum(concat({a, c}, 0), seed); }, {a, c}) < 1e-6);
    CHECK(grad_check([&] { return weighted_sum(concat({a, c}, 1), seed); }, {a, c}) < 1e-6);
    CHECK(grad_check([&] { return weighted_sum(slice(a, 0, 1, 3), seed); }, {a}) < 1e-6);
    CHECK(grad_check([&] { return weighted_sum(slice(a, 1, 1, 4), seed); }, {a}) < 1e-6);
    CHECK(grad_check([&] { return weighted_sum(transpose(a), seed); }, {a}) < 1e-6);
    CHECK(grad_check([&] { return sum(a); }, {a}) < 1e-9);
    CHECK(grad_check([&] { return mean(a); }, {a}) < 1e-9);

    Tensor tgt = rand_t(rng, {3, 4});
    CHECK(grad_check([&] { return mse_loss(a, tgt); }, {a}) < 1e-6);

    Tensor lw = rand_t(rng, {4, 2});
    Tensor lb = rand_t(rng, {2});
    CHECK(grad_check([&] { return weighted_sum(linear(a, lw, lb), seed); }, {a, lw, lb}) < 1e-6);
  }
}

TEST_CASE("gradcheck: composite MLP chain") {
  Rng rng(99);
  Tensor x = rand_t(rng, {5, 3});
  Tensor w1 = rand_t(rng, {3, 6});
  Tensor b1 = rand_t(rng, {6});
  Tensor w2 = rand_t(rng, {6, 1});
  Tensor b2 = rand_t(rng, {1});
  Tensor tgt = rand_t(rng, {5, 1});
  auto loss = [&] { return mse_loss(linear(silu(linear(x, w1, b1)), w2, b2), tgt); };
  CHECK(grad_check(loss, {x, w1, b1, w2, b2}) < 1e-6);
}
