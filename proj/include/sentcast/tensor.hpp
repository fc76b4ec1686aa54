#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace sentcast {

using Shape = std::vector<std::int64_t>;

std::string shape_str(const Shape& s);
std::int64_t shape_numel(const Shape& s);

class Tensor;

struct TensorNode {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated by backward(); leaves accumulate
  bool requires_grad = false;
  bool is_leaf = true;
  std::vector<Tensor> parents;
  std::function<void()> backprop;  // adds into parents' grad buffers
};

// Value-semantics handle onto a shared graph node.  Ops build the reverse
// graph unless a NoGradGuard is active.
class Tensor {
 public:
  Tensor() = default;

  static Tensor from(Shape shape, std::vector<double> data, bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double v, bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::int64_t numel() const { return static_cast<std::int64_t>(node_->value.size()); }
  std::int64_t rows() const;  // rank-2: dim0; rank-1: length; scalar: 1
  std::int64_t cols() const;  // rank-2: dim1; rank-1/scalar: 1

  const std::vector<double>& value() const { return node_->value; }
  std::vector<double>& mutable_value();  // leaves only (optimizer updates)
  const std::vector<double>& grad() const { return node_->grad; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  void set_requires_grad(bool v);
  void zero_grad();

  double item() const;  // scalar tensors

  TensorNode* node() const { return node_.get(); }

 private:
  std::shared_ptr<TensorNode> node_;
  friend Tensor make_op_node(Shape shape, std::vector<double> value, std::vector<Tensor> parents);
};

// Builds an interior graph node; caller assigns node()->backprop afterwards.
// The node tracks gradients iff some parent does and grad mode is on.
Tensor make_op_node(Shape shape, std::vector<double> value, std::vector<Tensor> parents);

bool grad_enabled();
struct NoGradGuard {
  NoGradGuard();
  ~NoGradGuard();
  bool prev;
};

// Reverse-mode sweep from a scalar loss: allocates/zeroes interior grads,
// seeds d(loss)=1, then runs each node's backprop once in reverse
// topological order.  Leaf grads accumulate across calls until zero_grad.
void backward(const Tensor& loss);

struct Parameter {
  std::string name;
  Tensor value;
};

// ---- primitives -------------------------------------------------------------
// Shape rules: binary elementwise ops take equal shapes, or broadcast a
// rank-1 [cols] / scalar right-hand side across leading dims.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor exp(const Tensor& a);
Tensor softplus(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor silu(const Tensor& a);
Tensor gelu(const Tensor& a);
Tensor softmax_lastdim(const Tensor& a);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias);

// out[t,c] = sum_j kernel[c,j] * x[t-j,c] within each seg_len-row segment
// (positions before a segment start read as zero).
Tensor causal_depthwise_conv1d(const Tensor& x, const Tensor& kernel, const Tensor& bias,
                               std::int64_t seg_len);

Tensor gather_rows(const Tensor& x, const std::vector<std::int64_t>& indices);
// out has `out_rows` rows; out[indices[i]] = x[i] (indices unique), rest 0.
Tensor scatter_rows(const Tensor& x, const std::vector<std::int64_t>& indices,
                    std::int64_t out_rows);
Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor slice(const Tensor& x, int axis, std::int64_t lo, std::int64_t hi);
Tensor transpose(const Tensor& x);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor mse_loss(const Tensor& pred, const Tensor& target);

// x[m,k] * w[k,n] + b[n]
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

}  // namespace sentcast
