#include <doctest.h>

#include <cmath>
#include <vector>

#include "gradcheck.hpp"
#include "sentcast/common.hpp"
#include "sentcast/mamba.hpp"
#include "sentcast/rng.hpp"
#include "sentcast/tensor.hpp"

using namespace sentcast;

namespace {

// Step-by-step reference recurrence, written with a different state layout and
// plain std::exp so it shares no code with the production kernel.
std::vector<double> reference_scan(const std::vector<double>& dt, const std::vector<double>& a,
                                   const std::vector<double>& b, const std::vector<double>& c,
                                   const std::vector<double>& d, const std::vector<double>& x,
                                   std::int64_t rows, std::int64_t d_inner, std::int64_t d_state,
                                   std::int64_t seq_len) {
  std::vector<double> y(static_cast<size_t>(rows * d_inner));
  std::vector<double> h(static_cast<size_t>(d_inner * d_state));
  for (std::int64_t t = 0; t < rows; ++t) {
    if (t % seq_len == 0) std::fill(h.begin(), h.end(), 0.0);
    for (std::int64_t ch = 0; ch < d_inner; ++ch) {
      double dtc = dt[static_cast<size_t>(t * d_inner + ch)];
      double xc = x[static_cast<size_t>(t * d_inner + ch)];
      double acc = 0.0;
      for (std::int64_t s = 0; s < d_state; ++s) {
        double abar = std::exp(dtc * a[static_cast<size_t>(ch * d_state + s)]);
        double hv = abar * h[static_cast<size_t>(ch * d_state + s)] +
                    dtc * xc * b[static_cast<size_t>(t * d_state + s)];
        h[static_cast<size_t>(ch * d_state + s)] = hv;
        acc += c[static_cast<size_t>(t * d_state + s)] * hv;
      }
      y[static_cast<size_t>(t * d_inner + ch)] = acc + d[static_cast<size_t>(ch)] * xc;
    }
  }
  return y;
}

Tensor rand_t(Rng& rng, std::vector<std::int64_t> shape, double lo, double hi,
              bool grad = false) {
  std::int64_t n = 1;
  for (std::int64_t s : shape) n *= s;
  std::vector<double> v(static_cast<size_t>(n));
  for (double& e : v) e = rng.uniform(lo, hi);
  return Tensor::from(shape, std::move(v), grad);
}

}  // namespace

TEST_CASE("hand-computed two-step recurrence") {
  double ln2 = std::log(2.0);
  Tensor dt = Tensor::from({2, 1}, {ln2, ln2});
  Tensor a = Tensor::from({1, 1}, {-1.0});
  Tensor b = Tensor::from({2, 1}, {1.0, 1.0});
  Tensor c = Tensor::from({2, 1}, {1.0, 1.0});
  Tensor d = Tensor::from({1}, {0.0});
  Tensor x = Tensor::from({2, 1}, {1.0, 1.0});
  Tensor y = selective_scan(dt, a, b, c, d, x, 2);
  // abar = exp(-ln2) = 1/2, so h1 = ln2, h2 = 1.5*ln2.
  CHECK(std::fabs(y.value()[0] - 0.6931471805599453) < 1e-12);
  CHECK(std::fabs(y.value()[1] - 1.0397207708399179) < 1e-12);
}

TEST_CASE("dt approaching zero leaves only the passthrough term") {
  Rng rng(11);
  std::int64_t rows = 12, di = 5, ds = 4;
  Tensor dt = Tensor::full({rows, di}, 1e-14);
  Tensor a = rand_t(rng, {di, ds}, -2.0, -0.1);
  Tensor b = rand_t(rng, {rows, ds}, -1.0, 1.0);
  Tensor c = rand_t(rng, {rows, ds}, -1.0, 1.0);
  Tensor d = rand_t(rng, {di}, -2.0, 2.0);
  Tensor x = rand_t(rng, {rows, di}, -1.0, 1.0);
  Tensor y = selective_scan(dt, a, b, c, d, x, rows);
  for (std::int64_t t = 0; t < rows; ++t)
    for (std::int64_t ch = 0; ch < di; ++ch)
      CHECK(std::fabs(y.value()[t * di + ch] - d.value()[ch] * x.value()[t * di + ch]) < 1e-10);
}

TEST_CASE("segment boundaries reset the state") {
  Rng rng(12);
  std::int64_t seq = 4, di = 3, ds = 5;
  Tensor dt = rand_t(rng, {2 * seq, di}, 0.05, 0.9);
  Tensor a = rand_t(rng, {di, ds}, -2.0, -0.1);
  Tensor b = rand_t(rng, {2 * seq, ds}, -1.0, 1.0);
  Tensor c = rand_t(rng, {2 * seq, ds}, -1.0, 1.0);
  Tensor d = rand_t(rng, {di}, -1.0, 1.0);
  Tensor x = rand_t(rng, {2 * seq, di}, -1.0, 1.0);
  Tensor both = selective_scan(dt, a, b, c, d, x, seq);
  Tensor first = selective_scan(slice(dt, 0, 0, seq), a, slice(b, 0, 0, seq),
                                slice(c, 0, 0, seq), d, slice(x, 0, 0, seq), seq);
  Tensor second = selective_scan(slice(dt, 0, seq, 2 * seq), a, slice(b, 0, seq, 2 * seq),
                                 slice(c, 0, seq, 2 * seq), d, slice(x, 0, seq, 2 * seq), seq);
  for (std::int64_t i = 0; i < seq * di; ++i) {
    CHECK(both.value()[i] == first.value()[i]);
    CHECK(both.value()[seq * di + i] == second.value()[i]);
  }
}

TEST_CASE("rejects non-positive dt and mismatched shapes") {
  Tensor dt = Tensor::full({2, 1}, 0.1);
  Tensor a = Tensor::from({1, 1}, {-1.0});
  Tensor b = Tensor::full({2, 1}, 1.0);
  Tensor c = Tensor::full({2, 1}, 1.0);
  Tensor d = Tensor::full({1}, 0.0);
  Tensor x = Tensor::full({2, 1}, 1.0);

  Tensor dt_zero = Tensor::from({2, 1}, {0.1, 0.0});
  CHECK_THROWS_AS(selective_scan(dt_zero, a, b, c, d, x, 2), InputError);
  Tensor dt_neg = Tensor::from({2, 1}, {0.1, -0.3});
  CHECK_THROWS_AS(selective_scan(dt_neg, a, b, c, d, x, 2), InputError);

  Tensor b_bad = Tensor::full({2, 3}, 1.0);
  CHECK_THROWS_AS(selective_scan(dt, a, b_bad, c, d, x, 2), DimensionError);
  Tensor d_bad = Tensor::full({4}, 0.0);
  CHECK_THROWS_AS(selective_scan(dt, a, b, c, d_bad, x, 2), DimensionError);
  CHECK_THROWS_AS(selective_scan(dt, a, b, c, d, x, 3), DimensionError);
}

TEST_CASE("matches the step-by-step reference on randomized instances") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(derive_seed(400, "scan." + std::to_string(seed)));
    std::int64_t di = 1 + static_cast<std::int64_t>(rng.uniform_int(8));
    std::int64_t ds = 1 + static_cast<std::int64_t>(rng.uniform_int(16));
    std::int64_t seq = 1 + static_cast<std::int64_t>(rng.uniform_int(16));
    std::int64_t nseg = 1 + static_cast<std::int64_t>(rng.uniform_int(
                                static_cast<std::uint64_t>(32 / seq)));
    std::int64_t rows = seq * nseg;
    Tensor dt = rand_t(rng, {rows, di}, 0.001, 1.0);
    Tensor a = rand_t(rng, {di, ds}, -4.0, -0.01);
    Tensor b = rand_t(rng, {rows, ds}, -1.0, 1.0);
    Tensor c = rand_t(rng, {rows, ds}, -1.0, 1.0);
    Tensor d = rand_t(rng, {di}, -1.0, 1.0);
    Tensor x = rand_t(rng, {rows, di}, -1.0, 1.0);
    Tensor y = selective_scan(dt, a, b, c, d, x, seq);
    std::vector<double> ref = reference_scan(dt.value(), a.value(), b.value(), c.value(),
                                             d.value(), x.value(), rows, di, ds, seq);
    double worst = 0.0;
    for (size_t i = 0; i < ref.size(); ++i)
      worst = std::max(worst, std::fabs(y.value()[i] - ref[i]));
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("long scans with decaying state stay bounded") {
  Rng rng(13);
  std::int64_t rows = 512, di = 4, ds = 8;
  Tensor dt = rand_t(rng, {rows, di}, 0.01, 1.0);
  Tensor a = rand_t(rng, {di, ds}, -3.0, -0.05);
  Tensor b = rand_t(rng, {rows, ds}, -1.0, 1.0);
  Tensor c = rand_t(rng, {rows, ds}, -1.0, 1.0);
  Tensor d = rand_t(rng, {di}, -1.0, 1.0);
  Tensor x = rand_t(rng, {rows, di}, -1.0, 1.0);
  Tensor y = selective_scan(dt, a, b, c, d, x, rows);
  for (double v : y.value()) {
    CHECK(std::isfinite(v));
    CHECK(std::fabs(v) < 1.0e4);
  }
}

TEST_CASE("backward after a newer scan reuses the history buffer is rejected") {
  Rng rng(14);
  auto make = [&] {
    Tensor dt = rand_t(rng, {4, 2}, 0.1, 0.9, true);
    Tensor a = rand_t(rng, {2, 3}, -2.0, -0.1, true);
    Tensor b = rand_t(rng, {4, 3}, -1.0, 1.0, true);
    Tensor c = rand_t(rng, {4, 3}, -1.0, 1.0, true);
    Tensor d = rand_t(rng, {2}, -1.0, 1.0, true);
    Tensor x = rand_t(rng, {4, 2}, -1.0, 1.0, true);
    return selective_scan(dt, a, b, c, d, x, 4);
  };
  Tensor stale = sum(make());
  Tensor fresh = sum(make());
  CHECK_THROWS_AS(backward(stale), InternalError);
  backward(fresh);
}

TEST_CASE("gradient matches central differences") {
  for (std::uint64_t seed : {21, 22, 23}) {
    Rng rng(seed);
    std::int64_t rows = 6, di = 3, ds = 4;
    // dt stays well inside (0, inf) so finite-difference probes remain valid.
    Tensor dt = rand_t(rng, {rows, di}, 0.1, 1.0);
    Tensor a = rand_t(rng, {di, ds}, -2.0, -0.1);
    Tensor b = rand_t(rng, {rows, ds}, -1.0, 1.0);
    Tensor c = rand_t(rng, {rows, ds}, -1.0, 1.0);
    Tensor d = rand_t(rng, {di}, -1.0, 1.0);
    Tensor x = rand_t(rng, {rows, di}, -1.0, 1.0);
    std::vector<double> w(static_cast<size_t>(rows * di));
    for (double& e : w) e = rng.uniform(-1.0, 1.0);
    Tensor weights = Tensor::from({rows, di}, std::move(w));
    auto loss = [&] { return sum(mul(selective_scan(dt, a, b, c, d, x, 3), weights)); };
    CHECK(testutil::grad_check(loss, {dt, a, b, c, d, x}) < 1e-6);
  }
}
