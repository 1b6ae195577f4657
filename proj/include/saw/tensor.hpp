#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "saw/error.hpp"

namespace saw {

/// Dense row-major tensor of rank 1 or 2.
template <class T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape, T fill = T(0)) : shape_(std::move(shape)) {
    if (shape_.empty() || shape_.size() > 2) {
      throw Error(ErrorKind::invalid_argument, "tensor rank must be 1 or 2");
    }
    values_.assign(std::accumulate(shape_.begin(), shape_.end(), std::size_t{1}, std::multiplies<>()), fill);
  }

  static Tensor vector(std::size_t n, T fill = T(0)) { return Tensor({n}, fill); }
  static Tensor matrix(std::size_t rows, std::size_t cols, T fill = T(0)) { return Tensor({rows, cols}, fill); }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }
  std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
  std::size_t cols() const { return shape_.size() == 2 ? shape_[1] : 1; }

  T* data() { return values_.data(); }
  const T* data() const { return values_.data(); }
  std::span<T> span() { return values_; }
  std::span<const T> span() const { return values_; }
  std::vector<T>& values() { return values_; }
  const std::vector<T>& values() const { return values_; }

  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }
  T& operator()(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }

  std::span<T> row(std::size_t r) { return std::span<T>(values_).subspan(r * cols(), cols()); }
  std::span<const T> row(std::size_t r) const { return std::span<const T>(values_).subspan(r * cols(), cols()); }

  void fill(T value) { std::fill(values_.begin(), values_.end(), value); }
  void zero() { fill(T(0)); }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const {
    for (T v : values_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  bool operator==(const Tensor&) const = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<T> values_;
};

inline std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i != 0) s += 'x';
    s += std::to_string(shape[i]);
  }
  return s;
}

/// A learnable tensor and its gradient slot.
template <class T>
struct Param {
  Tensor<T> value;
  Tensor<T> grad;

  Param() = default;
  explicit Param(std::vector<std::size_t> shape) : value(shape), grad(std::move(shape)) {}
};

/// Non-owning named view over a model's parameters, in a fixed order.
template <class T>
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Param<T>* param;
  };

  void add(std::string name, Param<T>& param) {
    if (!names_.insert(name).second) throw Error(ErrorKind::invalid_argument, "duplicate parameter name '" + name + "'");
    if (!param.value.same_shape(param.grad)) {
      throw Error(ErrorKind::dimension_mismatch, "gradient slot shape differs for '" + name + "'");
    }
    entries_.push_back(Entry{std::move(name), &param});
  }

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  Param<T>* find(const std::string& name) const {
    for (const auto& e : entries_) {
      if (e.name == name) return e.param;
    }
    return nullptr;
  }

  std::size_t num_values() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.param->value.size();
    return n;
  }

  void zero_grad() {
    for (auto& e : entries_) e.param->grad.zero();
  }

  double grad_norm() const {
    double sq = 0.0;
    for (const auto& e : entries_) {
      for (T g : e.param->grad.values()) sq += static_cast<double>(g) * static_cast<double>(g);
    }
    return std::sqrt(sq);
  }

 private:
  std::vector<Entry> entries_;
  std::unordered_set<std::string> names_;
};

template <class T, class Rng>
void init_uniform(Tensor<T>& t, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : t.values()) v = static_cast<T>(dist(rng));
}

/// Glorot/Xavier uniform: bound sqrt(6 / (fan_in + fan_out)) for a
/// fan_out x fan_in matrix.
template <class T, class Rng>
void init_glorot(Tensor<T>& t, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
  init_uniform(t, bound, rng);
}

}  // namespace saw
