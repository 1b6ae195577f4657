#pragma once

// Small dense kernels with their backward passes. Vectors are std::vector<T>
// (or spans over tensor rows); matrices are rank-2 Tensors, row-major.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "saw/error.hpp"
#include "saw/tensor.hpp"

namespace saw {

template <class T>
using Vec = std::vector<T>;

enum class Mode { train, eval };

namespace ops {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::dimension_mismatch, what);
}

template <class T>
T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

/// y += W x
template <class T>
void matvec_acc(const Tensor<T>& W, std::span<const T> x, std::span<T> y) {
  const std::size_t rows = W.rows(), cols = W.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* w = W.data() + r * cols;
    T acc = T(0);
    for (std::size_t c = 0; c < cols; ++c) acc += w[c] * x[c];
    y[r] += acc;
  }
}

/// dx += W^T dy
template <class T>
void matvec_t_acc(const Tensor<T>& W, std::span<const T> dy, std::span<T> dx) {
  const std::size_t rows = W.rows(), cols = W.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* w = W.data() + r * cols;
    const T g = dy[r];
    for (std::size_t c = 0; c < cols; ++c) dx[c] += w[c] * g;
  }
}

/// G += dy x^T
template <class T>
void outer_acc(Tensor<T>& G, std::span<const T> dy, std::span<const T> x) {
  const std::size_t rows = G.rows(), cols = G.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    T* g = G.data() + r * cols;
    const T d = dy[r];
    for (std::size_t c = 0; c < cols; ++c) g[c] += d * x[c];
  }
}

template <class T>
T dot(std::span<const T> a, std::span<const T> b) {
  T acc = T(0);
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

template <class T>
void axpy(T alpha, std::span<const T> x, std::span<T> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

template <class T>
std::span<const T> cspan(const Vec<T>& v) {
  return std::span<const T>(v);
}

// ---------------------------------------------------------------------------

/// W x + b
template <class T>
Vec<T> dense(std::span<const T> x, const Tensor<T>& W, const Tensor<T>& b) {
  require(W.rank() == 2 && W.cols() == x.size(), "dense: weight has " + std::to_string(W.cols()) +
                                                     " columns, input has " + std::to_string(x.size()));
  require(b.size() == W.rows(), "dense: bias size differs from output size");
  Vec<T> y(b.values());
  matvec_acc<T>(W, x, y);
  return y;
}

/// Accumulates dW, db and returns dx for y = W x + b.
template <class T>
Vec<T> dense_backward(std::span<const T> x, std::span<const T> dy, const Tensor<T>& W, Tensor<T>& dW,
                      Tensor<T>& db) {
  outer_acc<T>(dW, dy, x);
  for (std::size_t i = 0; i < dy.size(); ++i) db[i] += dy[i];
  Vec<T> dx(x.size(), T(0));
  matvec_t_acc<T>(W, dy, dx);
  return dx;
}

/// Numerically stable softmax (max subtraction).
template <class T>
Vec<T> softmax(std::span<const T> v) {
  if (v.empty()) throw Error(ErrorKind::invalid_argument, "softmax of an empty vector");
  T max = v[0];
  for (T x : v) {
    if (std::isnan(x)) throw Error(ErrorKind::numeric, "softmax input contains NaN");
    max = std::max(max, x);
  }
  if (!std::isfinite(max)) throw Error(ErrorKind::numeric, "softmax input is not finite");
  Vec<T> out(v.size());
  T sum = T(0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - max);
    sum += out[i];
  }
  for (auto& o : out) o /= sum;
  return out;
}

/// Gradient w.r.t. the softmax input given the output p and dL/dp.
template <class T>
Vec<T> softmax_backward(std::span<const T> p, std::span<const T> dp) {
  const T inner = dot<T>(p, dp);
  Vec<T> ds(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) ds[i] = p[i] * (dp[i] - inner);
  return ds;
}

// ---------------------------------------------------------------------------

/// Inverted dropout mask: entries are 0 or 1/(1-rate). Empty in eval mode or
/// when rate is zero, meaning identity.
template <class T>
struct DropoutMask {
  Vec<T> scale;
  bool identity() const { return scale.empty(); }
};

template <class T, class Rng>
DropoutMask<T> make_dropout_mask(std::size_t n, double rate, Mode mode, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw Error(ErrorKind::invalid_argument, "dropout rate must be in [0, 1)");
  DropoutMask<T> mask;
  if (mode == Mode::eval || rate == 0.0) return mask;
  std::bernoulli_distribution keep(1.0 - rate);
  const T kept = static_cast<T>(1.0 / (1.0 - rate));
  mask.scale.resize(n);
  for (auto& s : mask.scale) s = keep(rng) ? kept : T(0);
  return mask;
}

template <class T>
void apply_mask(const DropoutMask<T>& mask, std::span<T> x) {
  if (mask.identity()) return;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] *= mask.scale[i];
}

/// Dropout over a whole vector; the backward pass multiplies by the same mask.
template <class T, class Rng>
Vec<T> dropout(std::span<const T> x, double rate, Mode mode, Rng& rng, DropoutMask<T>* mask_out = nullptr) {
  auto mask = make_dropout_mask<T>(x.size(), rate, mode, rng);
  Vec<T> y(x.begin(), x.end());
  apply_mask<T>(mask, y);
  if (mask_out != nullptr) *mask_out = std::move(mask);
  return y;
}

}  // namespace ops
}  // namespace saw
