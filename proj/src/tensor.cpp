#include "sentcast/tensor.hpp"

#include <malloc.h>

#include <algorithm>
#include <cmath>

#include "sentcast/blas.hpp"
#include "sentcast/common.hpp"
#include "sentcast/detexp.hpp"

namespace sentcast {

namespace {

thread_local bool t_grad_enabled = true;

constexpr double kLnEps = 1e-10;  // layer_norm variance guard

[[noreturn]] void dim_fail(const std::string& op, const Shape& a, const Shape& b) {
  throw DimensionError(op + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

void expect_rank2(const char* op, const Tensor& t) {
  if (t.shape().size() != 2)
    throw DimensionError(std::string(op) + ": expected rank-2 tensor, got " + shape_str(t.shape()));
}

// Training allocates multi-MB activation buffers every op; with default
// thresholds glibc serves those via mmap and returns them on free, so each
// step re-faults hundreds of MB.  Keep them on the heap and reusable.
struct MallocTune {
  MallocTune() {
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
  }
};
const MallocTune g_malloc_tune;

// Branchless so loops over it stay vectorizable.
double stable_sigmoid(double x) {
  double e = detexp(-std::abs(x));  // in (0, 1]
  double p = 1.0 / (1.0 + e);
  return detsel(x >= 0, p, 1.0 - p);
}

}  // namespace

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

std::int64_t shape_numel(const Shape& s) {
  std::int64_t n = 1;
  for (std::int64_t d : s) n *= d;
  return n;
}

Tensor Tensor::from(Shape shape, std::vector<double> data, bool requires_grad) {
  if (shape_numel(shape) != static_cast<std::int64_t>(data.size()))
    throw DimensionError("tensor: data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_str(shape));
  Tensor t;
  t.node_ = std::make_shared<TensorNode>();
  t.node_->shape = std::move(shape);
  t.node_->value = std::move(data);
  t.node_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  std::vector<double> v(static_cast<size_t>(shape_numel(shape)), 0.0);
  return from(std::move(shape), std::move(v), requires_grad);
}

Tensor Tensor::full(Shape shape, double val, bool requires_grad) {
  std::vector<double> v(static_cast<size_t>(shape_numel(shape)), val);
  return from(std::move(shape), std::move(v), requires_grad);
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return from(Shape{}, {v}, requires_grad);
}

std::int64_t Tensor::rows() const {
  const Shape& s = node_->shape;
  if (s.size() >= 1) return s[0];
  return 1;
}

std::int64_t Tensor::cols() const {
  const Shape& s = node_->shape;
  if (s.size() == 2) return s[1];
  return 1;
}

std::vector<double>& Tensor::mutable_value() {
  if (!node_->is_leaf)
    throw InputError("mutable_value: only leaf tensors may be mutated in place");
  return node_->value;
}

void Tensor::set_requires_grad(bool v) {
  if (!node_->is_leaf) throw InputError("set_requires_grad: not a leaf");
  node_->requires_grad = v;
}

void Tensor::zero_grad() { node_->grad.clear(); }

double Tensor::item() const {
  if (node_->value.size() != 1)
    throw DimensionError("item: tensor has " + std::to_string(node_->value.size()) + " elements");
  return node_->value[0];
}

Tensor make_op_node(Shape shape, std::vector<double> value, std::vector<Tensor> parents) {
  Tensor t = Tensor::from(std::move(shape), std::move(value), false);
  t.node()->is_leaf = false;
  if (t_grad_enabled) {
    bool track = false;
    for (const Tensor& p : parents) track = track || p.requires_grad();
    if (track) {
      t.node()->requires_grad = true;
      t.node()->parents = std::move(parents);
    }
  }
  return t;
}

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : prev(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = prev; }

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1)
    throw InputError("backward: loss must be a defined scalar tensor");

  // Iterative post-order DFS over parents.
  std::vector<TensorNode*> topo;
  std::vector<std::pair<TensorNode*, size_t>> stack;
  std::vector<TensorNode*> seen;
  auto visited = [&](TensorNode* n) {
    return std::find(seen.begin(), seen.end(), n) != seen.end();
  };
  stack.push_back({loss.node(), 0});
  seen.push_back(loss.node());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      TensorNode* p = node->parents[idx++].node();
      if (!visited(p)) {
        seen.push_back(p);
        stack.push_back({p, 0});
      }
    } else {
      topo.push_back(node);
      stack.pop_back();
    }
  }

  for (TensorNode* n : topo) {
    if (!n->requires_grad) continue;
    if (n->is_leaf && n->grad.size() == n->value.size()) continue;  // accumulate
    n->grad.assign(n->value.size(), 0.0);
  }
  if (loss.node()->requires_grad) loss.node()->grad[0] += 1.0;

  for (auto it = topo.rbegin(); it != topo.rend(); ++it)
    if ((*it)->backprop) (*it)->backprop();
}

// ---- binary elementwise with row/scalar broadcast ---------------------------

namespace {

enum class Bcast { same, row_vector, scalar_rhs };

Bcast bcast_kind(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) return Bcast::same;
  if (b.numel() == 1) return Bcast::scalar_rhs;
  if (b.shape().size() == 1 && a.shape().size() == 2 && b.shape()[0] == a.shape()[1])
    return Bcast::row_vector;
  dim_fail(op, a.shape(), b.shape());
}

template <typename Fwd>
Tensor binary_op(const char* name, const Tensor& a, const Tensor& b, Fwd fwd,
                 void (*bwd)(TensorNode*, TensorNode*, TensorNode*, Bcast)) {
  Bcast k = bcast_kind(name, a, b);
  const double* av = a.value().data();
  const double* bv = b.value().data();
  size_t n_elems = a.value().size();
  std::vector<double> out(n_elems);
  if (k == Bcast::same) {
#pragma omp simd
    for (size_t i = 0; i < n_elems; ++i) out[i] = fwd(av[i], bv[i]);
  } else if (k == Bcast::scalar_rhs) {
    double s = bv[0];
#pragma omp simd
    for (size_t i = 0; i < n_elems; ++i) out[i] = fwd(av[i], s);
  } else {
    size_t cols = static_cast<size_t>(a.cols());
    for (size_t r0 = 0; r0 < n_elems; r0 += cols)
#pragma omp simd
      for (size_t c = 0; c < cols; ++c) out[r0 + c] = fwd(av[r0 + c], bv[c]);
  }
  Tensor t = make_op_node(a.shape(), std::move(out), {a, b});
  if (t.requires_grad()) {
    TensorNode* n = t.node();
    TensorNode* pa = a.node();
    TensorNode* pb = b.node();
    n->backprop = [n, pa, pb, k, bwd] { bwd(n, pa, pb, k); };
  }
  return t;
}

void add_reduce_rhs(TensorNode* n, TensorNode* pb, Bcast k, double sign) {
  const double* g = n->grad.data();
  double* pg = pb->grad.data();
  size_t n_elems = n->grad.size();
  if (k == Bcast::same) {
#pragma omp simd
    for (size_t i = 0; i < n_elems; ++i) pg[i] += sign * g[i];
  } else if (k == Bcast::scalar_rhs) {
    double acc = 0.0;
#pragma omp simd reduction(+ : acc)
    for (size_t i = 0; i < n_elems; ++i) acc += g[i];
    pg[0] += sign * acc;
  } else {
    size_t cols = pb->value.size();
    for (size_t r0 = 0; r0 < n_elems; r0 += cols)
#pragma omp simd
      for (size_t c = 0; c < cols; ++c) pg[c] += sign * g[r0 + c];
  }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(
      "add", a, b, [](double x, double y) { return x + y; },
      [](TensorNode* n, TensorNode* pa, TensorNode* pb, Bcast k) {
        if (pa->requires_grad) {
          const double* g = n->grad.data();
          double* pg = pa->grad.data();
#pragma omp simd
          for (size_t i = 0; i < n->grad.size(); ++i) pg[i] += g[i];
        }
        if (pb->requires_grad) add_reduce_rhs(n, pb, k, 1.0);
      });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](TensorNode* n, TensorNode* pa, TensorNode* pb, Bcast k) {
        if (pa->requires_grad) {
          const double* g = n->grad.data();
          double* pg = pa->grad.data();
#pragma omp simd
          for (size_t i = 0; i < n->grad.size(); ++i) pg[i] += g[i];
        }
        if (pb->requires_grad) add_reduce_rhs(n, pb, k, -1.0);
      });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](TensorNode* n, TensorNode* pa, TensorNode* pb, Bcast k) {
        const double* g = n->grad.data();
        const double* av = pa->value.data();
        const double* bv = pb->value.data();
        size_t n_elems = n->grad.size();
        size_t cols = pb->value.size();
        if (pa->requires_grad) {
          double* pg = pa->grad.data();
          if (k == Bcast::same) {
#pragma omp simd
            for (size_t i = 0; i < n_elems; ++i) pg[i] += g[i] * bv[i];
          } else if (k == Bcast::scalar_rhs) {
            double s = bv[0];
#pragma omp simd
            for (size_t i = 0; i < n_elems; ++i) pg[i] += g[i] * s;
          } else {
            for (size_t r0 = 0; r0 < n_elems; r0 += cols)
#pragma omp simd
              for (size_t c = 0; c < cols; ++c) pg[r0 + c] += g[r0 + c] * bv[c];
          }
        }
        if (pb->requires_grad) {
          double* pg = pb->grad.data();
          if (k == Bcast::same) {
#pragma omp simd
            for (size_t i = 0; i < n_elems; ++i) pg[i] += g[i] * av[i];
          } else if (k == Bcast::scalar_rhs) {
            double acc = 0.0;
#pragma omp simd reduction(+ : acc)
            for (size_t i = 0; i < n_elems; ++i) acc += g[i] * av[i];
            pg[0] += acc;
          } else {
            for (size_t r0 = 0; r0 < n_elems; r0 += cols)
#pragma omp simd
              for (size_t c = 0; c < cols; ++c) pg[c] += g[r0 + c] * av[r0 + c];
          }
        }
      });
}

Tensor scale(const Tensor& a, double s) {
  std::vector<double> out(a.value().size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * s;
  Tensor t = make_op_node(a.shape(), std::move(out), {a});
  if (t.requires_grad()) {
    TensorNode* n = t.node();
    TensorNode* pa = a.node();
    n->backprop = [n, pa, s] {
      for (size_t i = 0; i < n->grad.size(); ++i) pa->grad[i] += n->grad[i] * s;
    };
  }
  return t;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  expect_rank2("matmul", a);
  expect_rank2("matmul", b);
  std::int64_t m = a.shape()[0], k = a.shape()[1], k2 = b.shape()[0], n = b.shape()[1];
  if (k != k2) dim_fail("matmul", a.shape(), b.shape());
  std::vector<double> out(static_cast<size_t>(m * n), 0.0);
  blas::dgemm(false, false, static_cast<int>(m), static_cast<int>(n), static_cast<int>(k), 1.0,
              a.value().data(), static_cast<int>(k), b.value().data(), static_cast<int>(n), 0.0,
              out.data(), static_cast<int>(n));
  Tensor t = make_op_node({m, n}, std::move(out), {a, b});
  if (t.requires_grad()) {
    TensorNode* nd = t.node();
    TensorNode* pa = a.node();
    TensorNode* pb = b.node();
    nd->backprop = [nd, pa, pb, m, n, k] {
      if (pa->requires_grad)  // dA += dC * B^T
        blas::dgemm(false, true, static_cast<int>(m), static_cast<int>(k), static_cast<int>(n),
                    1.0, nd->grad.data(), static_cast<int>(n), pb->value.data(),
                    static_cast<int>(n), 1.0, pa->grad.data(), static_cast<int>(k));
      if (pb->requires_grad)  // dB += A^T * dC
        blas::dgemm(true, false, static_cast<int>(k), static_cast<int>(n), static_cast<int>(m),
                    1.0, pa->value.data(), static_cast<int>(k), nd->grad.data(),
                    static_cast<int>(n), 1.0, pb->grad.data(), static_cast<int>(n));
    };
  }
  return t;
}

// ---- unary elementwise -------------------------------------------------------

namespace {

template <typename Fwd, typename Bwd>
Tensor unary_op(const Tensor& a, Fwd fwd, Bwd bwd) {
  std::vector<double> out(a.value().size());
  const double* av = a.value().data();
#pragma omp simd
  for (size_t i = 0; i < out.size(); ++i) out[i] = fwd(av[i]);
  Tensor t = make_op_node(a.shape(), std::move(out), {a});
  if (t.requires_grad()) {
    TensorNode* n = t.node();
    TensorNode* pa = a.node();
    n->backprop = [n, pa, bwd] {
      const double* g = n->grad.data();
      const double* pv = pa->value.data();
      const double* nv = n->value.data();
      double* pg = pa->grad.data();
#pragma omp simd
      for (size_t i = 0; i < n->grad.size(); ++i) pg[i] += g[i] * bwd(pv[i], nv[i]);
    };
  }
  return t;
}

}  // namespace

Tensor exp(const Tensor& a) {
  return unary_op(
      a, [](double x) { return detexp(x); }, [](double, double y) { return y; });
}

Tensor softplus(const Tensor& a) {
  auto fwd = [](double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return detexp(x);
    return std::log1p(detexp(x));
  };
  return unary_op(a, fwd, [](double x, double) { return stable_sigmoid(x); });
}

Tensor sigmoid(const Tensor& a) {
  return unary_op(
      a, [](double x) { return stable_sigmoid(x); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor silu(const Tensor& a) {
  return unary_op(
      a, [](double x) { return x * stable_sigmoid(x); },
      [](double x, double) {
        double s = stable_sigmoid(x);
        return s * (1.0 + x * (1.0 - s));
      });
}

Tensor gelu(const Tensor& a) {
  constexpr double kInvSqrt2 = 0.7071067811865475244;
  constexpr double kInvSqrt2Pi = 0.3989422804014326779;
  return unary_op(
      a, [](double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); },
      [](double x, double) {
        double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
        return cdf + x * kInvSqrt2Pi * detexp(-0.5 * x * x);
      });
}

Tensor softmax_lastdim(const Tensor& a) {
  std::int64_t cols = a.shape().empty() ? 1 : a.shape().back();
  std::int64_t rows = a.numel() / cols;
  std::vector<double> out(a.value().size());
  for (std::int64_t r = 0; r < rows; ++r) {
    const double* x = a.value().data() + r * cols;
    double* y = out.data() + r * cols;
    double mx = x[0];
    for (std::int64_t c = 1; c < cols; ++c) mx = std::max(mx, x[c]);
    double total = 0.0;
    for (std::int64_t c = 0; c < cols; ++c) {
      y[c] = detexp(x[c] - mx);
      total += y[c];
    }
    for (std::int64_t c = 0; c < cols; ++c) y[c] /= total;
  }
  Tensor t = make_op_node(a.shape(), std::move(out), {a});
  if (t.requires_grad()) {
    TensorNode* n = t.node();
    TensorNode* pa = a.node();
    n->backprop = [n, pa, rows, cols] {
      if (!pa->requires_grad) return;
      for (std::int64_t r = 0; r < rows; ++r) {
        const double* y = n->value.data() + r * cols;
        const double* g = n->grad.data() + r * cols;
        double dot = 0.0;
        for (std::int64_t c = 0; c < cols; ++c) dot += g[c] * y[c];
        double* dx = pa->grad.data() + r * cols;
        for (std::int64_t c = 0; c < cols; ++c) dx[c] += y[c] * (g[c] - dot);
      }
    };
  }
  return t;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias) {
  std::int64_t cols = x.shape().empty() ? 1 : x.shape().back();
  std::int64_t rows = x.numel() / cols;
  if (gain.numel() != cols || bias.numel() != cols)
    dim_fail("layer_norm", x.shape(), gain.shape());
  std::vector<double> out(x.value().size());
  std::vector<double> inv_std(static_cast<size_t>(rows));
  std::vector<double> xhat(x.value().size());
  for (std::int64_t r = 0; r < rows; ++r) {
    const double* v = x.value().data() + r * cols;
    double mu = 0.0;
    for (std::int64_t c = 0; c < cols; ++c) mu += v[c];
    mu /= static_cast<double>(cols);
    double var = 0.0;
    for (std::int64_t c = 0; c < cols; ++c) {
      double d = v[c] - mu;
      var += d * d;
    }
    var /= static_cast<double>(cols);
    double inv = 1.0 / std::sqrt(var + kLnEps);
    inv_std[static_cast<size_t>(r)] = inv;
    for (std::int64_t c = 0; c < cols; ++c) {
      double h = (v[c] - mu) * inv;
      xhat[r * cols + c] = h;
      out[r * cols + c] = h * gain.value()[c] + bias.value()[c];
    }
  }
  Tensor t = make_op_node(x.shape(), std::move(out), {x, gain, bias});
  if (t.requires_grad()) {
    TensorNode* n = t.node();
    TensorNode* px = x.node();
    TensorNode* pg = gain.node();
    TensorNode* pb = bias.node();
    n->backprop = [n, px, pg, pb, rows, cols, inv_std = std::move(inv_std),
                   xhat = std::move(xhat)] {
      for (std::int64_t r = 0; r < rows; ++r) {
        const double* g = n->grad.data() + r * cols;
        const double* h = xhat.data() + r * cols;
        if (pg->requires_grad)
          for (std::int64_t c = 0; c < cols; ++c) pg->grad[c] += g[c] * h[c];
        if (pb->requires_grad)
          for (std::int64_t c = 0; c < cols; ++c) pb->grad[c] += g[c];
        if (px->requires_grad) {
          double mean_dh = 0.0, mean_dh_h = 0.0;
          for (std::int64_t c = 0; c < cols; ++c) {
            double dh = g[c] * pg->value[c];
            mean_dh += dh;
            mean_dh_h += dh * h[c];
          }
          mean_dh /= static_cast<double>(cols);
          mean_dh_h /= static_cast<double>(cols);
          double inv = inv_std[static_cast<size_t>(r)];
          double* dx = px->grad.data() + r * cols;
          for (std::int64_t c = 0; c < cols; ++c) {
            double dh = g[c] * pg->value[c];
            dx[c] += inv * (dh - mean_dh - h[c] * mean_dh_h);
          }
        }
      }
    };
  }
  return t;
}

Tensor causal_depthwise_conv1d(const Tensor& x, const Tensor& kernel, const Tensor& bias,
                               std::int64_t seg_len) {
  expect_rank2("causal_depthwise_conv1d", x);
  expect_rank2("causal_depthwise_conv1d", kernel);
  std::int64_t rows = x.shape()[0], ch = x.shape()[1], kw = kernel.shape()[1];
  if (kernel.shape()[0] != ch || bias.numel() != ch)
    dim_fail("causal_depthwise_conv1d", x.shape(), kernel.shape());
  if (seg_len <= 0 || rows % seg_len != 0)
    throw DimensionError("causal_depthwise_conv1d: rows " + std::to_string(rows) +
                         " not a multiple of seg_len " + std::to_string(seg_len));
  std::vector<double> out(x.value().size());
  const double* xv = x.value().data();
  const double* kv = kernel.value().data();
  for (std::int64_t t = 0; t < rows; ++t) {
    std::int64_t seg_start = (t / seg_len) * seg_len;
    double* y = out.data() + t * ch;
    for (std::int64_t c = 0; c < ch; ++c) {
      double acc = bias.value()[c];
      std::int64_t max_j = std::min<std::int64_t>(kw - 1, t - seg_start);
      for (std::int64_t j = 0; j <= max_j; ++j) acc += kv[c * kw + j] * xv[(t - j) * ch + c];
      y[c] = acc;
    }
  }
  Tensor out_t = make_op_node(x.shape(), std::move(out), {x, kernel, bias});
  if (out_t.requires_grad()) {
    TensorNode* n = out_t.node();
    TensorNode* px = x.node();
    TensorNode* pk = kernel.node();
    TensorNode* pb = bias.node();
    n->backprop = [n, px, pk, pb, rows, ch, kw, seg_len] {
      for (std::int64_t t = 0; t < rows; ++t) {
        std::int64_t seg_start = (t / seg_len) * seg_len;
        const double* g = n->grad.data() + t * ch;
        for (std::int64_t c = 0; c < ch; ++c) {
          if (pb->requires_grad) pb->grad[c] += g[c];
          std::int64_t max_j = std::min<std::int64_t>(kw - 1, t - seg_start);
          for (std::int64_t j = 0; j <= max_j; ++j) {
            if (px->requires_grad) px->grad[(t - j) * ch + c] += g[c] * pk->value[c * kw + j];
            if (pk->requires_grad) pk->grad[c * kw + j] += g[c] * px->value[(t - j) * ch + c];
          }
        }
      }
    };
  }
  return out_t;
}

Tensor gather_rows(const Tensor& x, const std::vector<std::int64_t>& indices) {
  expect_rank2("gather_rows", x);
  std::int64_t rows = x.shape()[0], cols = x.shape()[1];
  for (std::int64_t i : indices)
    if (i < 0 || i >= rows)
      throw DimensionError("gather_rows: index " + std::to_string(i) + " out of " +
                           std::to_string(rows) + " rows");
  std::vector<double> out(indices.size() * static_cast<size_t>(cols));
  for (size_t r = 0; r < indices.size(); ++r)
    std::copy_n(x.value().data() + indices[r] * cols, cols, out.data() + r * cols);
  Tensor t = make_op_node({static_cast<std::int64_t>(indices.size()), cols}, std::move(out), {x});
  if (t.requires_grad()) {
    TensorNode* n = t.node();
    TensorNode* px = x.node();
    n->backprop = [n, px, indices, cols] {
      for (size_t r = 0; r < indices.size(); ++r)
        for (std::int64_t c = 0; c < cols; ++c)
          px->grad[indices[r] * cols + c] += n->grad[r * cols + c];
    };
  }
  return t;
}

Tensor scatter_rows(const Tensor& x, const std::vector<std::int64_t>& indices,
                    std::int64_t out_rows) {
  expect_rank2("scatter_rows", x);
  std::int64_t rows = x.shape()[0], cols = x.shape()[1];
  if (static_cast<std::int64_t>(indices.size()) != rows)
    throw DimensionError("scatter_rows: need one index per input row");
  std::vector<char> used(static_cast<size_t>(out_rows), 0);
  for (std::int64_t i : indices) {
    if (i < 0 || i >= out_rows)
      throw DimensionError("scatter_rows: index " + std::to_string(i) + " out of " +
                           std::to_string(out_rows) + " rows");
    if (used[static_cast<size_t>(i)]) throw InputError("scatter_rows: duplicate index");
    used[static_cast<size_t>(i)] = 1;
  }
  std::vector<double> out(static_cast<size_t>(out_rows * cols), 0.0);
  for (std::int64_t r = 0; r < rows; ++r)
    std::copy_n(x.value().data() + r * cols, cols, out.data() + indices[r] * cols);
  Tensor t = make_op_node({out_rows, cols}, std::move(out), {x});
  if (t.requires_grad()) {
    TensorNode* n = t.node();
    TensorNode* px = x.node();
    n->backprop = [n, px, indices, cols] {
      for (size_t r = 0; r < indices.size(); ++r)
        for (std::int64_t c = 0; c < cols; ++c)
          px->grad[r * cols + c] += n->grad[indices[r] * cols + c];
    };
  }
  return t;
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw InputError("concat: no tensors given");
  if (axis != 0 && axis != 1) throw InputError("concat: axis must be 0 or 1");
  for (const Tensor& p : parts) expect_rank2("concat", p);
  std::int64_t rows = parts[0].shape()[0], cols = parts[0].shape()[1];
  std::int64_t total = 0;
  for (const Tensor& p : parts) {
    if (axis == 0 && p.shape()[1] != cols) dim_fail("concat", parts[0].shape(), p.shape());
    if (axis == 1 && p.shape()[0] != rows) dim_fail("concat", parts[0].shape(), p.shape());
    total += p.shape()[axis];
  }
  Shape out_shape = axis == 0 ? Shape{total, cols} : Shape{rows, total};
  std::vector<double> out(static_cast<size_t>(shape_numel(out_shape)));
  std::int64_t off = 0;
  for (const Tensor& p : parts) {
    std::int64_t pr = p.shape()[0], pc = p.shape()[1];
    if (axis == 0) {
      std::copy_n(p.value().data(), pr * pc, out.data() + off * cols);
      off += pr;
    } else {
      for (std::int64_t r = 0; r < rows; ++r)
        std::copy_n(p.value().data() + r * pc, pc, out.data() + r * total + off);
      off += pc;
    }
  }
  Tensor t = make_op_node(out_shape, std::move(out), parts);
  if (t.requires_grad()) {
    TensorNode* n = t.node();
    std::vector<TensorNode*> pnodes;
    for (const Tensor& p : parts) pnodes.push_back(p.node());
    n->backprop = [n, pnodes, axis, rows, cols, total] {
      std::int64_t off = 0;
      for (TensorNode* p : pnodes) {
        std::int64_t pr = p->shape[0], pc = p->shape[1];
        if (p->requires_grad) {
          if (axis == 0) {
            for (std::int64_t i = 0; i < pr * pc; ++i) p->grad[i] += n->grad[off * cols + i];
          } else {
            for (std::int64_t r = 0; r < rows; ++r)
              for (std::int64_t c = 0; c < pc; ++c)
                p->grad[r * pc + c] += n->grad[r * total + off + c];
          }
        }
        off += axis == 0 ? pr : pc;
      }
    };
  }
  return t;
}

Tensor slice(const Tensor& x, int axis, std::int64_t lo, std::int64_t hi) {
  expect_rank2("slice", x);
  if (axis != 0 && axis != 1) throw InputError("slice: axis must be 0 or 1");
  std::int64_t rows = x.shape()[0], cols = x.shape()[1];
  std::int64_t dim = axis == 0 ? rows : cols;
  if (lo < 0 || hi > dim || lo >= hi)
    throw DimensionError("slice: range [" + std::to_string(lo) + "," + std::to_string(hi) +
                         ") invalid for dim " + std::to_string(dim));
  Shape out_shape = axis == 0 ? Shape{hi - lo, cols} : Shape{rows, hi - lo};
  std::vector<double> out(static_cast<size_t>(shape_numel(out_shape)));
  if (axis == 0) {
    std::copy_n(x.value().data() + lo * cols, (hi - lo) * cols, out.data());
  } else {
    for (std::int64_t r = 0; r < rows; ++r)
      std::copy_n(x.value().data() + r * cols + lo, hi - lo, out.data() + r * (hi - lo));
  }
  Tensor t = make_op_node(out_shape, std::move(out), {x});
  if (t.requires_grad()) {
    TensorNode* n = t.node();
    TensorNode* px = x.node();
    n->backprop = [n, px, axis, lo, hi, rows, cols] {
      if (axis == 0) {
        for (std::int64_t i = 0; i < (hi - lo) * cols; ++i) px->grad[lo * cols + i] += n->grad[i];
      } else {
        std::int64_t w = hi - lo;
        for (std::int64_t r = 0; r < rows; ++r)
          for (std::int64_t c = 0; c < w; ++c)
            px->grad[r * cols + lo + c] += n->grad[r * w + c];
      }
    };
  }
  return t;
}

Tensor transpose(const Tensor& x) {
  expect_rank2("transpose", x);
  std::int64_t rows = x.shape()[0], cols = x.shape()[1];
  std::vector<double> out(x.value().size());
  for (std::int64_t r = 0; r < rows; ++r)
    for (std::int64_t c = 0; c < cols; ++c) out[c * rows + r] = x.value()[r * cols + c];
  Tensor t = make_op_node({cols, rows}, std::move(out), {x});
  if (t.requires_grad()) {
    TensorNode* n = t.node();
    TensorNode* px = x.node();
    n->backprop = [n, px, rows, cols] {
      for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t c = 0; c < cols; ++c) px->grad[r * cols + c] += n->grad[c * rows + r];
    };
  }
  return t;
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.value()) acc += v;
  Tensor t = make_op_node({}, {acc}, {x});
  if (t.requires_grad()) {
    TensorNode* n = t.node();
    TensorNode* px = x.node();
    n->backprop = [n, px] {
      for (size_t i = 0; i < px->grad.size(); ++i) px->grad[i] += n->grad[0];
    };
  }
  return t;
}

Tensor mean(const Tensor& x) {
  double inv = 1.0 / static_cast<double>(x.numel());
  double acc = 0.0;
  for (double v : x.value()) acc += v;
  Tensor t = make_op_node({}, {acc * inv}, {x});
  if (t.requires_grad()) {
    TensorNode* n = t.node();
    TensorNode* px = x.node();
    n->backprop = [n, px, inv] {
      for (size_t i = 0; i < px->grad.size(); ++i) px->grad[i] += n->grad[0] * inv;
    };
  }
  return t;
}

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape()) dim_fail("mse_loss", pred.shape(), target.shape());
  double inv = 1.0 / static_cast<double>(pred.numel());
  double acc = 0.0;
  for (size_t i = 0; i < pred.value().size(); ++i) {
    double d = pred.value()[i] - target.value()[i];
    acc += d * d;
  }
  Tensor t = make_op_node({}, {acc * inv}, {pred, target});
  if (t.requires_grad()) {
    TensorNode* n = t.node();
    TensorNode* pp = pred.node();
    TensorNode* pt = target.node();
    n->backprop = [n, pp, pt, inv] {
      double g = n->grad[0];
      for (size_t i = 0; i < pp->value.size(); ++i) {
        double d = 2.0 * inv * (pp->value[i] - pt->value[i]) * g;
        if (pp->requires_grad) pp->grad[i] += d;
        if (pt->requires_grad) pt->grad[i] -= d;
      }
    };
  }
  return t;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  return add(matmul(x, w), b);
}

}  // namespace sentcast
