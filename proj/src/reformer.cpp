#include "sentcast/reformer.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>

#include "sentcast/common.hpp"
#include "sentcast/detexp.hpp"
#include "sentcast/optim.hpp"
#include "sentcast/rng.hpp"

namespace sentcast {

std::pair<Tensor, std::vector<char>> pad_sequence(const Tensor& x, std::int64_t bucket_size) {
  if (x.shape().size() != 2)
    throw DimensionError("pad_sequence: expected rank-2 tensor, got " + shape_str(x.shape()));
  if (bucket_size <= 0) throw InputError("pad_sequence: bucket_size must be positive");
  std::int64_t rows = x.shape()[0], cols = x.shape()[1];
  std::int64_t unit = 2 * bucket_size;
  std::int64_t padded = (rows + unit - 1) / unit * unit;
  std::vector<char> mask(static_cast<size_t>(padded), 0);
  std::fill(mask.begin(), mask.begin() + rows, 1);
  if (padded == rows) return {x, mask};
  return {concat({x, Tensor::zeros({padded - rows, cols})}, 0), mask};
}

std::vector<std::int64_t> lsh_bucket_ids(const double* vecs, std::int64_t n,
                                         std::int64_t head_dim, const double* rot,
                                         std::int64_t n_buckets) {
  if (n_buckets < 2 || n_buckets % 2 != 0)
    throw InputError("lsh_bucket_ids: n_buckets must be even and >= 2");
  std::int64_t half = n_buckets / 2;
  std::vector<std::int64_t> ids(static_cast<size_t>(n));
  std::vector<double> proj(static_cast<size_t>(half));
  for (std::int64_t i = 0; i < n; ++i) {
    const double* x = vecs + i * head_dim;
    for (std::int64_t j = 0; j < half; ++j) {
      double dot = 0.0;
      for (std::int64_t d = 0; d < head_dim; ++d) dot += x[d] * rot[d * half + j];
      proj[static_cast<size_t>(j)] = dot;
    }
    // argmax over concat(xR, -xR), first index wins ties
    std::int64_t best = 0;
    double best_v = proj[0];
    for (std::int64_t j = 1; j < half; ++j)
      if (proj[static_cast<size_t>(j)] > best_v) {
        best_v = proj[static_cast<size_t>(j)];
        best = j;
      }
    for (std::int64_t j = 0; j < half; ++j)
      if (-proj[static_cast<size_t>(j)] > best_v) {
        best_v = -proj[static_cast<size_t>(j)];
        best = half + j;
      }
    ids[static_cast<size_t>(i)] = best;
  }
  return ids;
}

namespace {

enum class AttnMode { forward, backward };

// One routine drives both directions so the bucketing, masking, and dropout
// draw order cannot drift between them.  Conceptual slots 0..L'-1 hold the
// real positions sorted by (bucket, position) followed by padding slots.
void attn_kernel(AttnMode mode, const LshAttentionSpec& s, const std::vector<double>& rot,
                 std::int64_t total_rows, const double* qkv, const double* vv, double* out,
                 const double* gout, double* dqk, double* dv) {
  const std::int64_t hd = s.head_dim, nheads = s.heads, dim = nheads * hd;
  const std::int64_t wrows = s.window_rows, rl = s.real_len, lp = s.seq_len, b = s.bucket_size;
  const std::int64_t nb = std::max<std::int64_t>(2, lp / b), half = nb / 2;
  const std::int64_t n_chunks = lp / b;
  const std::int64_t n_windows = total_rows / wrows;
  const double inv_sqrt_hd = 1.0 / std::sqrt(static_cast<double>(hd));
  const bool dropping = s.training && s.dropout_rate > 0.0;
  const double keep = 1.0 - s.dropout_rate;

  std::vector<double> headvec(static_cast<size_t>(rl * hd));
  std::vector<std::int64_t> order(static_cast<size_t>(lp));
  std::vector<std::int64_t> vis;
  std::vector<double> scores, probs, pt, dp;

  for (std::int64_t w = 0; w < n_windows; ++w) {
    const std::int64_t base = w * wrows;
    for (std::int64_t h = 0; h < nheads; ++h) {
      for (std::int64_t i = 0; i < rl; ++i)
        for (std::int64_t d = 0; d < hd; ++d)
          headvec[static_cast<size_t>(i * hd + d)] = qkv[(base + i) * dim + h * hd + d];
      std::vector<std::int64_t> ids =
          lsh_bucket_ids(headvec.data(), rl, hd, rot.data() + h * hd * half, nb);
      std::iota(order.begin(), order.begin() + rl, 0);
      std::stable_sort(order.begin(), order.begin() + rl,
                       [&](std::int64_t x, std::int64_t y) {
                         return ids[static_cast<size_t>(x)] < ids[static_cast<size_t>(y)];
                       });
      std::iota(order.begin() + rl, order.end(), rl);  // padding slots, sorted last

      Rng drop_rng(dropping ? derive_seed(s.seed, std::to_string(w) + "." + std::to_string(h))
                            : 0);

      for (std::int64_t c = 0; c < n_chunks; ++c) {
        const std::int64_t k_lo = c == 0 ? 0 : (c - 1) * b;
        const std::int64_t k_hi = std::min((c + 1) * b, lp);
        for (std::int64_t qs = c * b; qs < std::min((c + 1) * b, lp); ++qs) {
          const std::int64_t q = order[static_cast<size_t>(qs)];
          if (q >= rl) continue;  // padding slot
          const double* qvec = qkv + (base + q) * dim + h * hd;
          vis.clear();
          for (std::int64_t ks = k_lo; ks < k_hi; ++ks) {
            const std::int64_t k = order[static_cast<size_t>(ks)];
            if (k >= rl || k > q || k == q) continue;
            vis.push_back(k);
          }
          if (vis.empty()) {
            // Nothing visible: the query attends itself with weight 1.
            if (mode == AttnMode::forward) {
              for (std::int64_t d = 0; d < hd; ++d)
                out[(base + q) * dim + h * hd + d] = vv[(base + q) * dim + h * hd + d];
            } else {
              const double* g = gout + (base + q) * dim + h * hd;
              for (std::int64_t d = 0; d < hd; ++d) dv[(base + q) * dim + h * hd + d] += g[d];
            }
            continue;
          }
          scores.resize(vis.size());
          for (size_t j = 0; j < vis.size(); ++j) {
            const double* kvec = qkv + (base + vis[j]) * dim + h * hd;
            double dot = 0.0;
            for (std::int64_t d = 0; d < hd; ++d) dot += qvec[d] * kvec[d];
            scores[j] = dot * inv_sqrt_hd;
          }
          double mx = scores[0];
          for (size_t j = 1; j < scores.size(); ++j) mx = std::max(mx, scores[j]);
          probs.resize(vis.size());
          double total = 0.0;
          for (size_t j = 0; j < scores.size(); ++j) {
            probs[j] = detexp(scores[j] - mx);
            total += probs[j];
          }
          for (size_t j = 0; j < probs.size(); ++j) probs[j] /= total;
          pt.resize(probs.size());
          if (dropping) {
            for (size_t j = 0; j < probs.size(); ++j) {
              bool kept = drop_rng.uniform() >= s.dropout_rate;
              pt[j] = kept ? probs[j] / keep : 0.0;
            }
          } else {
            pt = probs;
          }

          if (mode == AttnMode::forward) {
            double* o = out + (base + q) * dim + h * hd;
            for (size_t j = 0; j < vis.size(); ++j) {
              const double* kv2 = vv + (base + vis[j]) * dim + h * hd;
              for (std::int64_t d = 0; d < hd; ++d) o[d] += pt[j] * kv2[d];
            }
          } else {
            const double* g = gout + (base + q) * dim + h * hd;
            double dot_pg = 0.0;
            dp.resize(vis.size());
            for (size_t j = 0; j < vis.size(); ++j) {
              const double* kv2 = vv + (base + vis[j]) * dim + h * hd;
              double gv = 0.0;
              for (std::int64_t d = 0; d < hd; ++d) {
                dv[(base + vis[j]) * dim + h * hd + d] += pt[j] * g[d];
                gv += g[d] * kv2[d];
              }
              double scale_j = pt[j] == 0.0 && dropping ? 0.0 : (dropping ? 1.0 / keep : 1.0);
              dp[j] = gv * scale_j;
              dot_pg += dp[j] * probs[j];
            }
            for (size_t j = 0; j < vis.size(); ++j) {
              double ds = probs[j] * (dp[j] - dot_pg);
              const double* kvec = qkv + (base + vis[j]) * dim + h * hd;
              double* dq = dqk + (base + q) * dim + h * hd;
              double* dk = dqk + (base + vis[j]) * dim + h * hd;
              for (std::int64_t d = 0; d < hd; ++d) {
                dq[d] += ds * kvec[d] * inv_sqrt_hd;
                dk[d] += ds * qvec[d] * inv_sqrt_hd;
              }
            }
          }
        }
      }
    }
  }
}

}  // namespace

Tensor lsh_attention(const Tensor& qk, const Tensor& v, const std::vector<double>& rotations,
                     const LshAttentionSpec& spec) {
  if (qk.shape() != v.shape()) throw DimensionError("lsh_attention: qk/v shape mismatch");
  if (qk.shape().size() != 2 || qk.cols() != spec.heads * spec.head_dim)
    throw DimensionError("lsh_attention: expected columns = heads*head_dim");
  if (spec.seq_len % (2 * spec.bucket_size) != 0)
    throw DimensionError("lsh_attention: seq_len must be a multiple of 2*bucket_size");
  if (spec.real_len <= 0 || spec.real_len > spec.seq_len)
    throw DimensionError("lsh_attention: real_len out of range");
  if (spec.window_rows != spec.real_len && spec.window_rows != spec.seq_len)
    throw DimensionError("lsh_attention: window_rows must equal real_len or seq_len");
  if (qk.rows() % spec.window_rows != 0)
    throw DimensionError("lsh_attention: rows not a multiple of window_rows");
  if (spec.dropout_rate < 0.0 || spec.dropout_rate >= 1.0)
    throw InputError("lsh_attention: dropout_rate must be in [0,1)");
  std::int64_t nb = std::max<std::int64_t>(2, spec.seq_len / spec.bucket_size);
  if (static_cast<std::int64_t>(rotations.size()) != spec.heads * spec.head_dim * (nb / 2))
    throw DimensionError("lsh_attention: rotations size mismatch");

  std::int64_t total_rows = qk.rows();
  std::vector<double> out(qk.value().size(), 0.0);
  attn_kernel(AttnMode::forward, spec, rotations, total_rows, qk.value().data(),
              v.value().data(), out.data(), nullptr, nullptr, nullptr);

  Tensor t = make_op_node(qk.shape(), std::move(out), {qk, v});
  if (t.requires_grad()) {
    TensorNode* n = t.node();
    TensorNode* pqk = qk.node();
    TensorNode* pv = v.node();
    LshAttentionSpec s = spec;
    auto rot = std::make_shared<std::vector<double>>(rotations);
    n->backprop = [n, pqk, pv, s, rot, total_rows] {
      std::vector<double> dqk_local, dv_local;
      double* dqk = pqk->requires_grad ? pqk->grad.data() : nullptr;
      double* dv = pv->requires_grad ? pv->grad.data() : nullptr;
      if (!dqk) {
        dqk_local.assign(pqk->value.size(), 0.0);
        dqk = dqk_local.data();
      }
      if (!dv) {
        dv_local.assign(pv->value.size(), 0.0);
        dv = dv_local.data();
      }
      attn_kernel(AttnMode::backward, s, *rot, total_rows, pqk->value.data(), pv->value.data(),
                  nullptr, n->grad.data(), dqk, dv);
    };
  }
  return t;
}

ReformerModel::ReformerModel(ReformerConfig cfg, std::uint64_t seed) : cfg_(cfg), seed_(seed) {
  if (cfg.model_dim % cfg.heads != 0)
    throw DimensionError("reformer: model_dim must be divisible by heads");
  if (cfg.n_hashes != 1)
    throw ConfigError("reformer: n_hashes=" + std::to_string(cfg.n_hashes) +
                      " not supported (only 1 hash round is implemented)");
  if (cfg.bucket_size <= 0 || cfg.seq_len <= 0 || cfg.depth <= 0)
    throw ConfigError("reformer: dims must be positive");
  if (cfg.lsh_dropout < 0.0 || cfg.lsh_dropout >= 1.0)
    throw ConfigError("reformer: lsh_dropout must be in [0,1)");

  Rng rng(seed);
  std::int64_t dm = cfg.model_dim, ff = cfg.ff_mult * dm;
  in_w_ = xavier_uniform(rng, cfg.input_dim, dm);
  in_b_ = Tensor::zeros({dm}, true);
  layers_.resize(static_cast<size_t>(cfg.depth));
  for (auto& l : layers_) {
    l.qk_w = xavier_uniform(rng, dm, dm);
    l.v_w = xavier_uniform(rng, dm, dm);
    l.out_w = xavier_uniform(rng, dm, dm);
    l.ff1_w = xavier_uniform(rng, dm, ff);
    l.ff2_w = xavier_uniform(rng, ff, dm);
    l.qk_b = Tensor::zeros({dm}, true);
    l.v_b = Tensor::zeros({dm}, true);
    l.out_b = Tensor::zeros({dm}, true);
    l.ff1_b = Tensor::zeros({ff}, true);
    l.ff2_b = Tensor::zeros({dm}, true);
    l.ln_a_g = Tensor::full({dm}, 1.0, true);
    l.ln_a_b = Tensor::zeros({dm}, true);
    l.ln_f_g = Tensor::full({dm}, 1.0, true);
    l.ln_f_b = Tensor::zeros({dm}, true);
  }
  head_w_ = xavier_uniform(rng, dm, 1);
  head_b_ = Tensor::zeros({1}, true);

  std::int64_t half = cfg.n_buckets() / 2;
  rot_.resize(static_cast<size_t>(cfg.depth));
  for (auto& r : rot_) {
    r.resize(static_cast<size_t>(cfg.heads * cfg.head_dim() * half));
    for (double& x : r) x = rng.normal();
  }

  params_ = {{"in_proj.w", in_w_}, {"in_proj.b", in_b_}};
  for (std::int64_t i = 0; i < cfg.depth; ++i) {
    const Layer& l = layers_[static_cast<size_t>(i)];
    std::string p = "layer" + std::to_string(i) + ".";
    params_.push_back({p + "attn.ln.g", l.ln_a_g});
    params_.push_back({p + "attn.ln.b", l.ln_a_b});
    params_.push_back({p + "attn.qk.w", l.qk_w});
    params_.push_back({p + "attn.qk.b", l.qk_b});
    params_.push_back({p + "attn.v.w", l.v_w});
    params_.push_back({p + "attn.v.b", l.v_b});
    params_.push_back({p + "attn.out.w", l.out_w});
    params_.push_back({p + "attn.out.b", l.out_b});
    params_.push_back({p + "ff.ln.g", l.ln_f_g});
    params_.push_back({p + "ff.ln.b", l.ln_f_b});
    params_.push_back({p + "ff.fc1.w", l.ff1_w});
    params_.push_back({p + "ff.fc1.b", l.ff1_b});
    params_.push_back({p + "ff.fc2.w", l.ff2_w});
    params_.push_back({p + "ff.fc2.b", l.ff2_b});
  }
  params_.push_back({"head.w", head_w_});
  params_.push_back({"head.b", head_b_});
}

Tensor ReformerModel::attn_block(const Tensor& x2, int layer, bool training) {
  const Layer& l = layers_.at(static_cast<size_t>(layer));
  Tensor ln = layer_norm(x2, l.ln_a_g, l.ln_a_b);
  Tensor qk = linear(ln, l.qk_w, l.qk_b);
  Tensor v = linear(ln, l.v_w, l.v_b);
  LshAttentionSpec s;
  s.heads = cfg_.heads;
  s.head_dim = cfg_.head_dim();
  s.bucket_size = cfg_.bucket_size;
  s.seq_len = cfg_.padded_len();
  s.real_len = cfg_.seq_len;
  s.window_rows = cfg_.seq_len;
  s.dropout_rate = training ? cfg_.lsh_dropout : 0.0;
  s.training = training;
  s.seed = derive_seed(seed_, "drop." + std::to_string(step_) + "." + std::to_string(layer));
  Tensor a = lsh_attention(qk, v, rot_.at(static_cast<size_t>(layer)), s);
  return linear(a, l.out_w, l.out_b);
}

Tensor ReformerModel::ff_block(const Tensor& y1, int layer) {
  const Layer& l = layers_.at(static_cast<size_t>(layer));
  Tensor ln = layer_norm(y1, l.ln_f_g, l.ln_f_b);
  return linear(silu(linear(ln, l.ff1_w, l.ff1_b)), l.ff2_w, l.ff2_b);
}

std::pair<Tensor, Tensor> ReformerModel::reversible_forward(const Tensor& x1, const Tensor& x2,
                                                            int layer, bool training) {
  Tensor y1 = add(x1, attn_block(x2, layer, training));
  Tensor y2 = add(x2, ff_block(y1, layer));
  return {y1, y2};
}

std::pair<Tensor, Tensor> ReformerModel::reversible_inverse(const Tensor& y1, const Tensor& y2,
                                                            int layer) {
  NoGradGuard ng;
  Tensor x2 = sub(y2, ff_block(y1, layer));
  Tensor x1 = sub(y1, attn_block(x2, layer, false));
  return {x1, x2};
}

Tensor ReformerModel::forward(const Tensor& batch, bool training) {
  if (batch.cols() != cfg_.input_dim)
    throw DimensionError("reformer forward: expected " + std::to_string(cfg_.input_dim) +
                         " input columns, got " + std::to_string(batch.cols()));
  if (batch.rows() % cfg_.seq_len != 0)
    throw DimensionError("reformer forward: rows not a multiple of seq_len");
  Tensor x = linear(batch, in_w_, in_b_);
  Tensor x1 = x, x2 = x;
  for (int l = 0; l < static_cast<int>(cfg_.depth); ++l)
    std::tie(x1, x2) = reversible_forward(x1, x2, l, training);
  if (training) ++step_;
  std::int64_t n = batch.rows() / cfg_.seq_len;
  std::vector<std::int64_t> last(static_cast<size_t>(n));
  for (std::int64_t i = 0; i < n; ++i)
    last[static_cast<size_t>(i)] = i * cfg_.seq_len + cfg_.seq_len - 1;
  Tensor r = scale(add(gather_rows(x1, last), gather_rows(x2, last)), 0.5);
  return linear(r, head_w_, head_b_);
}

}  // namespace sentcast
