#include "sentcast/mamba.hpp"

#include <cmath>

#include "sentcast/common.hpp"
#include "sentcast/detexp.hpp"
#include "sentcast/optim.hpp"

namespace sentcast {

namespace {

// Scan state history and exp staging live in per-thread arenas so repeated
// calls do not re-fault and re-zero hundreds of MB.  Consequence: a scan
// node's backward must run before the next selective_scan forward on the same
// thread (training and eval loops do this naturally); the generation counter
// turns a violation into a loud error instead of silent corruption.
thread_local std::vector<double> t_scan_hist;
thread_local std::vector<double> t_scan_stage;
thread_local std::uint64_t t_scan_gen = 0;

}  // namespace

Tensor selective_scan(const Tensor& dt, const Tensor& a, const Tensor& b, const Tensor& c,
                      const Tensor& d, const Tensor& x, std::int64_t seq_len) {
  std::int64_t rows = dt.rows(), d_inner = dt.cols(), d_state = a.cols();
  if (a.rows() != d_inner || b.rows() != rows || b.cols() != d_state || c.rows() != rows ||
      c.cols() != d_state || d.numel() != d_inner || x.shape() != dt.shape())
    throw DimensionError("selective_scan: inconsistent operand shapes");
  if (seq_len <= 0 || rows % seq_len != 0)
    throw DimensionError("selective_scan: rows " + std::to_string(rows) +
                         " not a multiple of seq_len " + std::to_string(seq_len));

  const double* dtv = dt.value().data();
  const double* av = a.value().data();
  const double* bv = b.value().data();
  const double* cv = c.value().data();
  const double* dv = d.value().data();
  const double* xv = x.value().data();

  for (std::int64_t i = 0; i < rows * d_inner; ++i)
    if (!(dtv[i] > 0.0))
      throw InputError("selective_scan: dt must be strictly positive");

  size_t hist_need = static_cast<size_t>(rows * d_inner * d_state);
  if (t_scan_hist.size() < hist_need) t_scan_hist.resize(hist_need);
  if (t_scan_stage.size() < static_cast<size_t>(d_inner * d_state))
    t_scan_stage.resize(static_cast<size_t>(d_inner * d_state));
  std::uint64_t gen = ++t_scan_gen;
  double* hist = t_scan_hist.data();
  double* ab = t_scan_stage.data();
  std::vector<double> y(static_cast<size_t>(rows * d_inner));
  const std::vector<double> h0(static_cast<size_t>(d_state), 0.0);

  for (std::int64_t t = 0; t < rows; ++t) {
    bool seg_start = t % seq_len == 0;
    const double* dtrow = dtv + t * d_inner;
    // Stage exp(dt*A) for the whole timestep so the transcendental runs as one
    // long vectorized pass and the recurrence below is pure fma.
    for (std::int64_t ch = 0; ch < d_inner; ++ch) {
      double dtc = dtrow[ch];
      const double* arow = av + ch * d_state;
      double* abrow = ab + ch * d_state;
#pragma omp simd
      for (std::int64_t s = 0; s < d_state; ++s) abrow[s] = dtc * arow[s];
    }
    detexp_array(ab, ab, static_cast<size_t>(d_inner * d_state));
    const double* brow = bv + t * d_state;
    const double* crow = cv + t * d_state;
    for (std::int64_t ch = 0; ch < d_inner; ++ch) {
      double dtc = dtrow[ch];
      double xc = xv[t * d_inner + ch];
      const double* hprev = seg_start ? h0.data() : hist + ((t - 1) * d_inner + ch) * d_state;
      double* hcur = hist + (t * d_inner + ch) * d_state;
      const double* abrow = ab + ch * d_state;
      double dbx = dtc * xc;
      double acc = 0.0;
#pragma omp simd reduction(+ : acc)
      for (std::int64_t s = 0; s < d_state; ++s) {
        double hv = abrow[s] * hprev[s] + dbx * brow[s];
        hcur[s] = hv;
        acc += crow[s] * hv;
      }
      y[t * d_inner + ch] = acc + dv[ch] * xc;
    }
  }

  Tensor out = make_op_node(dt.shape(), std::move(y), {dt, a, b, c, d, x});
  if (out.requires_grad()) {
    TensorNode* n = out.node();
    TensorNode* pdt = dt.node();
    TensorNode* pa = a.node();
    TensorNode* pb = b.node();
    TensorNode* pc = c.node();
    TensorNode* pd = d.node();
    TensorNode* px = x.node();
    n->backprop = [=] {
      if (t_scan_gen != gen)
        throw InternalError(
            "selective_scan: backward ran after a later scan reused the history buffer");
      const double* dtv = pdt->value.data();
      const double* av = pa->value.data();
      const double* bv = pb->value.data();
      const double* cv = pc->value.data();
      const double* dv = pd->value.data();
      const double* xv = px->value.data();
      const double* hist = t_scan_hist.data();
      double* ab = t_scan_stage.data();
      const std::vector<double> h0(static_cast<size_t>(d_state), 0.0);
      // Grad sinks for parents outside the differentiated set keep the hot
      // loop branch-free (and vectorizable).
      std::vector<double> sink;
      auto grad_or_sink = [&](TensorNode* p) {
        if (p->requires_grad) return p->grad.data();
        if (sink.empty())
          sink.resize(static_cast<size_t>(std::max(rows, d_inner) * d_state), 0.0);
        return sink.data();
      };
      double* agrad = grad_or_sink(pa);
      double* bgrad = grad_or_sink(pb);
      double* cgrad = grad_or_sink(pc);
      // carry[c,s] = exp(dt[t+1]A) * dh[t+1] flowing back into h[t]
      std::vector<double> carry(static_cast<size_t>(d_inner * d_state), 0.0);
      for (std::int64_t t = rows - 1; t >= 0; --t) {
        bool seg_start = t % seq_len == 0;
        const double* dtrow = dtv + t * d_inner;
        for (std::int64_t ch = 0; ch < d_inner; ++ch) {
          double dtc = dtrow[ch];
          const double* arow = av + ch * d_state;
          double* abrow = ab + ch * d_state;
#pragma omp simd
          for (std::int64_t s = 0; s < d_state; ++s) abrow[s] = dtc * arow[s];
        }
        detexp_array(ab, ab, static_cast<size_t>(d_inner * d_state));
        const double* brow = bv + t * d_state;
        const double* crow = cv + t * d_state;
        for (std::int64_t ch = 0; ch < d_inner; ++ch) {
          double dtc = dtrow[ch];
          double xc = xv[t * d_inner + ch];
          double dyc = n->grad[t * d_inner + ch];
          const double* arow = av + ch * d_state;
          const double* hprev = seg_start ? h0.data() : hist + ((t - 1) * d_inner + ch) * d_state;
          const double* hcur = hist + (t * d_inner + ch) * d_state;
          const double* abrow = ab + ch * d_state;
          double* arow_g = agrad + ch * d_state;
          double* brow_g = bgrad + t * d_state;
          double* crow_g = cgrad + t * d_state;
          double* cr = carry.data() + ch * d_state;
          double ddt = 0.0, dx = dyc * dv[ch];
          if (pd->requires_grad) pd->grad[ch] += dyc * xc;
#pragma omp simd reduction(+ : ddt, dx)
          for (std::int64_t s = 0; s < d_state; ++s) {
            double dh = dyc * crow[s] + cr[s];
            crow_g[s] += dyc * hcur[s];
            double abar = abrow[s];
            double via_abar = dh * hprev[s] * abar;
            ddt += via_abar * arow[s];
            double bts = brow[s];
            ddt += dh * bts * xc;
            brow_g[s] += dh * dtc * xc;
            dx += dh * dtc * bts;
            arow_g[s] += via_abar * dtc;
            cr[s] = seg_start ? 0.0 : abar * dh;
          }
          if (pdt->requires_grad) pdt->grad[t * d_inner + ch] += ddt;
          if (px->requires_grad) px->grad[t * d_inner + ch] += dx;
        }
      }
    };
  }
  return out;
}

MambaModel::MambaModel(MambaConfig cfg, std::uint64_t seed) : cfg_(cfg) {
  Rng rng(seed);
  std::int64_t dm = cfg.d_model, di = cfg.d_inner(), ds = cfg.d_state, dr = cfg.dt_rank();

  in_w_ = xavier_uniform(rng, cfg.input_dim, dm);
  xz_w_ = xavier_uniform(rng, dm, 2 * di);
  double cb = xavier_bound(cfg.d_conv, 1);
  std::vector<double> ck(static_cast<size_t>(di * cfg.d_conv));
  for (double& v : ck) v = rng.uniform(-cb, cb);
  conv_k_ = Tensor::from({di, cfg.d_conv}, std::move(ck), true);
  bcd_w_ = xavier_uniform(rng, di, 2 * ds + dr);
  dt_w_ = xavier_uniform(rng, dr, di);
  out_w_ = xavier_uniform(rng, di, dm);
  head_w_ = xavier_uniform(rng, dm, 1);

  in_b_ = Tensor::zeros({dm}, true);
  xz_b_ = Tensor::zeros({2 * di}, true);
  conv_b_ = Tensor::zeros({di}, true);
  bcd_b_ = Tensor::zeros({2 * ds + dr}, true);
  out_b_ = Tensor::zeros({dm}, true);
  head_b_ = Tensor::zeros({1}, true);

  // dt_proj bias chosen so softplus(bias) spans 0.001..0.1 log-spaced per channel.
  std::vector<double> dtb(static_cast<size_t>(di));
  for (std::int64_t ch = 0; ch < di; ++ch) {
    double frac = di > 1 ? static_cast<double>(ch) / static_cast<double>(di - 1) : 0.5;
    double target = std::exp(std::log(0.001) + frac * std::log(100.0));
    dtb[static_cast<size_t>(ch)] = std::log(std::expm1(target));
  }
  dt_b_ = Tensor::from({di}, std::move(dtb), true);

  std::vector<double> alog(static_cast<size_t>(di * ds));
  for (std::int64_t ch = 0; ch < di; ++ch)
    for (std::int64_t s = 0; s < ds; ++s)
      alog[static_cast<size_t>(ch * ds + s)] = std::log(static_cast<double>(s + 1));
  a_log_ = Tensor::from({di, ds}, std::move(alog), true);
  dd_ = Tensor::full({di}, 1.0, true);

  params_ = {{"in_proj.w", in_w_},
             {"in_proj.b", in_b_},
             {"block.xz_proj.w", xz_w_},
             {"block.xz_proj.b", xz_b_},
             {"block.conv.kernel", conv_k_},
             {"block.conv.bias", conv_b_},
             {"block.x_to_bcdt.w", bcd_w_},
             {"block.x_to_bcdt.b", bcd_b_},
             {"block.dt_proj.w", dt_w_},
             {"block.dt_proj.b", dt_b_},
             {"block.a_log", a_log_},
             {"block.d", dd_},
             {"block.out_proj.w", out_w_},
             {"block.out_proj.b", out_b_},
             {"head.w", head_w_},
             {"head.b", head_b_}};
}

Tensor MambaModel::block(const Tensor& u, std::int64_t seq_len) {
  std::int64_t di = cfg_.d_inner(), ds = cfg_.d_state, dr = cfg_.dt_rank();
  Tensor xz = linear(u, xz_w_, xz_b_);
  Tensor x = slice(xz, 1, 0, di);
  Tensor z = slice(xz, 1, di, 2 * di);
  x = silu(causal_depthwise_conv1d(x, conv_k_, conv_b_, seq_len));
  Tensor bcd = linear(x, bcd_w_, bcd_b_);
  Tensor b = slice(bcd, 1, 0, ds);
  Tensor c = slice(bcd, 1, ds, 2 * ds);
  Tensor dt_raw = slice(bcd, 1, 2 * ds, 2 * ds + dr);
  Tensor dt = softplus(linear(dt_raw, dt_w_, dt_b_));
  Tensor a = scale(exp(a_log_), -1.0);
  Tensor y = selective_scan(dt, a, b, c, dd_, x, seq_len);
  return linear(mul(y, silu(z)), out_w_, out_b_);
}

Tensor MambaModel::forward(const Tensor& batch, std::int64_t seq_len) {
  if (batch.cols() != cfg_.input_dim)
    throw DimensionError("mamba forward: expected " + std::to_string(cfg_.input_dim) +
                         " input columns, got " + std::to_string(batch.cols()));
  if (seq_len <= 0 || batch.rows() % seq_len != 0)
    throw DimensionError("mamba forward: rows not a multiple of seq_len");
  Tensor u = linear(batch, in_w_, in_b_);
  Tensor out = block(u, seq_len);
  std::int64_t n = batch.rows() / seq_len;
  std::vector<std::int64_t> last(static_cast<size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) last[static_cast<size_t>(i)] = i * seq_len + seq_len - 1;
  return linear(gather_rows(out, last), head_w_, head_b_);
}

}  // namespace sentcast
