#pragma once

// Gated recurrent unit and its bidirectional wrapper, with hand-derived
// backward passes.
//
//   r  = sigmoid(W_r x + U_r h_prev + b_r)
//   z  = sigmoid(W_z x + U_z h_prev + b_z)
//   hc = tanh(W_h x + U_h (r * h_prev) + b_h)
//   h  = (1 - z) * h_prev + z * hc

#include <string>
#include <vector>

#include "saw/ops.hpp"
#include "saw/tensor.hpp"

namespace saw {

template <class T>
struct GruParams {
  Param<T> W_r, W_z, W_h;
  Param<T> U_r, U_z, U_h;
  Param<T> b_r, b_z, b_h;

  GruParams() = default;
  GruParams(std::size_t input_dim, std::size_t hidden_dim)
      : W_r({hidden_dim, input_dim}), W_z({hidden_dim, input_dim}), W_h({hidden_dim, input_dim}),
        U_r({hidden_dim, hidden_dim}), U_z({hidden_dim, hidden_dim}), U_h({hidden_dim, hidden_dim}),
        b_r({hidden_dim}), b_z({hidden_dim}), b_h({hidden_dim}) {}

  std::size_t input_dim() const { return W_r.value.cols(); }
  std::size_t hidden_dim() const { return W_r.value.rows(); }

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + ".W_r", W_r);
    f(prefix + ".W_z", W_z);
    f(prefix + ".W_h", W_h);
    f(prefix + ".U_r", U_r);
    f(prefix + ".U_z", U_z);
    f(prefix + ".U_h", U_h);
    f(prefix + ".b_r", b_r);
    f(prefix + ".b_z", b_z);
    f(prefix + ".b_h", b_h);
  }

  /// Glorot-uniform weights, zero biases.
  template <class Rng>
  void init(Rng& rng) {
    for (auto* p : {&W_r, &W_z, &W_h, &U_r, &U_z, &U_h}) init_glorot(p->value, rng);
    for (auto* p : {&b_r, &b_z, &b_h}) p->value.zero();
  }
};

/// Intermediates of one step, kept for the backward pass.
template <class T>
struct GruStepCache {
  Vec<T> x, h_prev, r, z, h_cand, rh, h;
};

template <class T>
GruStepCache<T> gru_step_cached(std::span<const T> x, std::span<const T> h_prev, const GruParams<T>& p) {
  const std::size_t H = p.hidden_dim();
  ops::require(x.size() == p.input_dim(),
               "gru_step: input has " + std::to_string(x.size()) + " values, expected " + std::to_string(p.input_dim()));
  ops::require(h_prev.size() == H, "gru_step: hidden state has " + std::to_string(h_prev.size()) +
                                       " values, expected " + std::to_string(H));
  GruStepCache<T> c;
  c.x.assign(x.begin(), x.end());
  c.h_prev.assign(h_prev.begin(), h_prev.end());

  c.r = p.b_r.value.values();
  ops::matvec_acc<T>(p.W_r.value, x, c.r);
  ops::matvec_acc<T>(p.U_r.value, h_prev, c.r);
  for (auto& v : c.r) v = ops::sigmoid(v);

  c.z = p.b_z.value.values();
  ops::matvec_acc<T>(p.W_z.value, x, c.z);
  ops::matvec_acc<T>(p.U_z.value, h_prev, c.z);
  for (auto& v : c.z) v = ops::sigmoid(v);

  c.rh.resize(H);
  for (std::size_t i = 0; i < H; ++i) c.rh[i] = c.r[i] * h_prev[i];
  c.h_cand = p.b_h.value.values();
  ops::matvec_acc<T>(p.W_h.value, x, c.h_cand);
  ops::matvec_acc<T>(p.U_h.value, ops::cspan(c.rh), c.h_cand);
  for (auto& v : c.h_cand) v = std::tanh(v);

  c.h.resize(H);
  for (std::size_t i = 0; i < H; ++i) c.h[i] = (T(1) - c.z[i]) * h_prev[i] + c.z[i] * c.h_cand[i];
  return c;
}

template <class T>
Vec<T> gru_step(std::span<const T> x, std::span<const T> h_prev, const GruParams<T>& p) {
  return gru_step_cached(x, h_prev, p).h;
}

/// Accumulates parameter gradients into `p` and adds dL/dx and dL/dh_prev
/// into `dx` and `dh_prev`.
template <class T>
void gru_step_backward(const GruStepCache<T>& c, std::span<const T> dh, GruParams<T>& p, std::span<T> dx,
                       std::span<T> dh_prev) {
  const std::size_t H = p.hidden_dim();
  Vec<T> da_z(H), da_h(H), drh(H, T(0)), da_r(H);
  for (std::size_t i = 0; i < H; ++i) {
    dh_prev[i] += dh[i] * (T(1) - c.z[i]);
    const T dz = dh[i] * (c.h_cand[i] - c.h_prev[i]);
    da_z[i] = dz * c.z[i] * (T(1) - c.z[i]);
    const T dhc = dh[i] * c.z[i];
    da_h[i] = dhc * (T(1) - c.h_cand[i] * c.h_cand[i]);
  }
  const auto x = ops::cspan(c.x);
  const auto h_prev = ops::cspan(c.h_prev);

  ops::outer_acc<T>(p.W_h.grad, ops::cspan(da_h), x);
  ops::outer_acc<T>(p.U_h.grad, ops::cspan(da_h), ops::cspan(c.rh));
  ops::axpy<T>(T(1), ops::cspan(da_h), p.b_h.grad.span());
  ops::matvec_t_acc<T>(p.W_h.value, ops::cspan(da_h), dx);
  ops::matvec_t_acc<T>(p.U_h.value, ops::cspan(da_h), std::span<T>(drh));

  for (std::size_t i = 0; i < H; ++i) {
    dh_prev[i] += drh[i] * c.r[i];
    const T dr = drh[i] * c.h_prev[i];
    da_r[i] = dr * c.r[i] * (T(1) - c.r[i]);
  }

  ops::outer_acc<T>(p.W_z.grad, ops::cspan(da_z), x);
  ops::outer_acc<T>(p.U_z.grad, ops::cspan(da_z), h_prev);
  ops::axpy<T>(T(1), ops::cspan(da_z), p.b_z.grad.span());
  ops::matvec_t_acc<T>(p.W_z.value, ops::cspan(da_z), dx);
  ops::matvec_t_acc<T>(p.U_z.value, ops::cspan(da_z), dh_prev);

  ops::outer_acc<T>(p.W_r.grad, ops::cspan(da_r), x);
  ops::outer_acc<T>(p.U_r.grad, ops::cspan(da_r), h_prev);
  ops::axpy<T>(T(1), ops::cspan(da_r), p.b_r.grad.span());
  ops::matvec_t_acc<T>(p.W_r.value, ops::cspan(da_r), dx);
  ops::matvec_t_acc<T>(p.U_r.value, ops::cspan(da_r), dh_prev);
}

// ---------------------------------------------------------------------------

/// BiGRU over the rows of `seq`. Row t of `out` is forward_h[t] || backward_h[t],
/// where the backward direction has consumed rows T-1 .. t.
template <class T>
struct BiGruResult {
  Tensor<T> out;
  Vec<T> fwd_final;  // forward state after the last row
  Vec<T> bwd_final;  // backward state after the first row
  std::vector<GruStepCache<T>> fwd_steps;
  std::vector<GruStepCache<T>> bwd_steps;  // bwd_steps[t] processed row t
};

template <class T>
struct BiGruParams {
  GruParams<T> fwd, bwd;

  BiGruParams() = default;
  BiGruParams(std::size_t input_dim, std::size_t hidden_dim) : fwd(input_dim, hidden_dim), bwd(input_dim, hidden_dim) {}

  std::size_t input_dim() const { return fwd.input_dim(); }
  std::size_t hidden_dim() const { return fwd.hidden_dim(); }
  std::size_t output_dim() const { return 2 * fwd.hidden_dim(); }

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    fwd.visit(prefix + ".fwd", f);
    bwd.visit(prefix + ".bwd", f);
  }

  template <class Rng>
  void init(Rng& rng) {
    fwd.init(rng);
    bwd.init(rng);
  }
};

template <class T>
BiGruResult<T> bigru(const Tensor<T>& seq, const GruParams<T>& fwd, const GruParams<T>& bwd) {
  const std::size_t steps = seq.rows();
  if (steps == 0 || seq.size() == 0) throw Error(ErrorKind::invalid_argument, "bigru: empty sequence");
  ops::require(fwd.hidden_dim() == bwd.hidden_dim(), "bigru: direction hidden sizes differ");
  const std::size_t H = fwd.hidden_dim();
  BiGruResult<T> res;
  res.out = Tensor<T>::matrix(steps, 2 * H);
  res.fwd_steps.reserve(steps);
  res.bwd_steps.resize(steps);

  Vec<T> h(H, T(0));
  for (std::size_t t = 0; t < steps; ++t) {
    res.fwd_steps.push_back(gru_step_cached<T>(seq.row(t), h, fwd));
    h = res.fwd_steps.back().h;
    std::copy(h.begin(), h.end(), res.out.row(t).begin());
  }
  res.fwd_final = h;

  h.assign(H, T(0));
  for (std::size_t t = steps; t-- > 0;) {
    res.bwd_steps[t] = gru_step_cached<T>(seq.row(t), h, bwd);
    h = res.bwd_steps[t].h;
    std::copy(h.begin(), h.end(), res.out.row(t).begin() + static_cast<std::ptrdiff_t>(H));
  }
  res.bwd_final = h;
  return res;
}

template <class T>
BiGruResult<T> bigru(const Tensor<T>& seq, const BiGruParams<T>& p) {
  return bigru(seq, p.fwd, p.bwd);
}

/// Backward through bigru given dL/d(out) (may be empty for "no gradient")
/// and dL/d(final states) (either may be empty). Returns dL/d(seq).
template <class T>
Tensor<T> bigru_backward(const BiGruResult<T>& res, const Tensor<T>& d_out, std::span<const T> d_fwd_final,
                         std::span<const T> d_bwd_final, GruParams<T>& fwd, GruParams<T>& bwd) {
  const std::size_t steps = res.fwd_steps.size();
  const std::size_t H = fwd.hidden_dim();
  const std::size_t D = fwd.input_dim();
  const bool has_out = d_out.size() != 0;
  Tensor<T> d_seq = Tensor<T>::matrix(steps, D);

  Vec<T> dh(H, T(0));
  if (!d_fwd_final.empty()) std::copy(d_fwd_final.begin(), d_fwd_final.end(), dh.begin());
  for (std::size_t t = steps; t-- > 0;) {
    if (has_out) {
      for (std::size_t i = 0; i < H; ++i) dh[i] += d_out(t, i);
    }
    Vec<T> dh_prev(H, T(0));
    gru_step_backward<T>(res.fwd_steps[t], dh, fwd, d_seq.row(t), dh_prev);
    dh = std::move(dh_prev);
  }

  dh.assign(H, T(0));
  if (!d_bwd_final.empty()) std::copy(d_bwd_final.begin(), d_bwd_final.end(), dh.begin());
  for (std::size_t t = 0; t < steps; ++t) {
    if (has_out) {
      for (std::size_t i = 0; i < H; ++i) dh[i] += d_out(t, H + i);
    }
    Vec<T> dh_prev(H, T(0));
    gru_step_backward<T>(res.bwd_steps[t], dh, bwd, d_seq.row(t), dh_prev);
    dh = std::move(dh_prev);
  }
  return d_seq;
}

template <class T>
Tensor<T> bigru_backward(const BiGruResult<T>& res, const Tensor<T>& d_out, std::span<const T> d_fwd_final,
                         std::span<const T> d_bwd_final, BiGruParams<T>& p) {
  return bigru_backward(res, d_out, d_fwd_final, d_bwd_final, p.fwd, p.bwd);
}

}  // namespace saw
