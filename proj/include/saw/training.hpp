#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "saw/error.hpp"
#include "saw/reader.hpp"
#include "saw/tensor.hpp"

namespace saw {

struct TrainConfig {
  std::size_t batch_size = 64;
  double base_lr = 0.001;
  double clip_threshold = 10.0;
  std::size_t epochs = 10;
  std::uint64_t seed = 1234;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  /// Last epoch trained at base_lr; the rate halves every epoch after it.
  /// Zero disables the decay.
  std::size_t lr_decay_after = 2;

  void validate() const {
    if (batch_size < 1) throw Error(ErrorKind::config, "batch_size must be >= 1");
    if (!(base_lr > 0.0)) throw Error(ErrorKind::config, "base_lr must be positive");
    if (!(clip_threshold > 0.0)) throw Error(ErrorKind::config, "clip_threshold must be positive");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
      throw Error(ErrorKind::config, "adam betas must be in [0, 1)");
    }
    if (!(adam_epsilon > 0.0)) throw Error(ErrorKind::config, "adam_epsilon must be positive");
  }
};

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double valid_acc = 0.0;

  bool operator==(const EpochRecord&) const = default;
};

using TrainHistory = std::vector<EpochRecord>;

inline void write_history_csv(std::ostream& out, const TrainHistory& history) {
  out << "epoch,lr,train_loss,train_acc,valid_acc\n";
  out << std::setprecision(10);
  for (const auto& r : history) {
    out << r.epoch << ',' << r.lr << ',' << r.train_loss << ',' << r.train_acc << ',' << r.valid_acc << '\n';
  }
}

/// -log P(answer), with the probability floored at 1e-12.
inline double loss(const AnswerDistribution& dist, const std::string& answer_word) {
  const auto* c = dist.find(answer_word);
  if (c == nullptr) throw Error(ErrorKind::data, "unanswerable example");
  return -std::log(std::max(c->prob, kProbFloor));
}

/// Epochs 1..decay_after use base_lr; epoch e after that uses
/// base_lr / 2^(e - decay_after).
inline double lr_schedule(std::size_t epoch, double base_lr, std::size_t decay_after = 2) {
  if (epoch < 1) throw Error(ErrorKind::invalid_argument, "epochs are numbered from 1");
  if (decay_after == 0 || epoch <= decay_after) return base_lr;
  return std::ldexp(base_lr, -static_cast<int>(epoch - decay_after));
}

/// Global-norm clipping: scales every gradient by threshold / norm when the
/// norm exceeds the threshold. Returns the norm before clipping.
template <class T>
double clip_gradients(ParamStore<T>& params, double threshold) {
  if (!(threshold > 0.0)) throw Error(ErrorKind::invalid_argument, "clip threshold must be positive");
  const double norm = params.grad_norm();
  if (norm > threshold) {
    const T factor = static_cast<T>(threshold / norm);
    for (auto& e : params.entries()) {
      for (auto& g : e.param->grad.values()) g *= factor;
    }
  }
  return norm;
}

template <class T>
struct AdamState {
  std::vector<Tensor<T>> m, v;
  std::uint64_t t = 0;

  AdamState() = default;
  explicit AdamState(const ParamStore<T>& params) {
    for (const auto& e : params.entries()) {
      m.emplace_back(e.param->value.shape());
      v.emplace_back(e.param->value.shape());
    }
  }
};

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected ADAM:
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
///   theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
template <class T>
void adam_step(ParamStore<T>& params, AdamState<T>& state, double lr, const AdamHyper& hyper = {}) {
  if (state.m.size() != params.size()) throw Error(ErrorKind::dimension_mismatch, "adam: state does not match parameters");
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (!params.entries()[p].param->grad.all_finite()) {
      throw Error(ErrorKind::numeric, "adam: non-finite gradient for " + params.entries()[p].name);
    }
    if (!state.m[p].same_shape(params.entries()[p].param->value)) {
      throw Error(ErrorKind::dimension_mismatch, "adam: state shape differs for " + params.entries()[p].name);
    }
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.t));
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& value = params.entries()[p].param->value.values();
    const auto& grad = params.entries()[p].param->grad.values();
    auto& m = state.m[p].values();
    auto& v = state.v[p].values();
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = static_cast<double>(grad[i]);
      const double mi = hyper.beta1 * static_cast<double>(m[i]) + (1.0 - hyper.beta1) * g;
      const double vi = hyper.beta2 * static_cast<double>(v[i]) + (1.0 - hyper.beta2) * g * g;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      const double update = lr * (mi / c1) / (std::sqrt(vi / c2) + hyper.epsilon);
      value[i] = static_cast<T>(static_cast<double>(value[i]) - update);
    }
  }
}

/// Fraction of examples whose eval-mode prediction equals the answer.
template <class T>
double accuracy(const ReaderModel<T>& model, const std::vector<EncodedExample>& data) {
  if (data.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& ex : data) {
    if (answer(forward<T>(model, ex, Mode::eval).dist) == ex.answer) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

/// Independent generator for (seed, epoch, stream).
inline std::mt19937_64 derived_rng(std::uint64_t seed, std::uint64_t epoch, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

/// Per-epoch callback; return false to stop training early.
using EpochCallback = std::function<bool(const EpochRecord&)>;

/// Mini-batch training of -log P(answer) with global-norm clipping and ADAM.
/// Examples are reshuffled every epoch from a seed derived from
/// (config.seed, epoch); dropout draws from a second derived stream. The
/// batch loss is the mean of per-example losses. train_loss / train_acc are
/// measured on the train-mode forwards seen during the epoch.
template <class T>
TrainHistory train(ReaderModel<T>& model, const std::vector<EncodedExample>& train_set,
                   const std::vector<EncodedExample>& valid_set, const TrainConfig& config,
                   const EpochCallback& on_epoch = {}) {
  config.validate();
  if (train_set.empty()) throw Error(ErrorKind::invalid_argument, "training set is empty");
  auto params = model.params();
  AdamState<T> adam(params);
  const AdamHyper hyper{config.adam_beta1, config.adam_beta2, config.adam_epsilon};
  TrainHistory history;

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    auto shuffle_rng = derived_rng(config.seed, epoch, 1);
    auto dropout_rng = derived_rng(config.seed, epoch, 2);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    const double lr = lr_schedule(epoch, config.base_lr, config.lr_decay_after);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const T scale = static_cast<T>(1.0 / static_cast<double>(end - start));
      params.zero_grad();
      for (std::size_t b = start; b < end; ++b) {
        const auto& ex = train_set[order[b]];
        try {
          const auto tr = forward<T>(model, ex, Mode::train, &dropout_rng);
          if (answer(tr.dist) == ex.answer) ++correct;
          loss_sum += backward(model, tr, ex.answer, scale);
        } catch (const Error& err) {
          throw Error(err.kind(), "example '" + ex.id + "': " + err.what());
        }
      }
      clip_gradients(params, config.clip_threshold);
      adam_step(params, adam, lr, hyper);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.train_loss = loss_sum / static_cast<double>(train_set.size());
    rec.train_acc = static_cast<double>(correct) / static_cast<double>(train_set.size());
    rec.valid_acc = accuracy(model, valid_set);
    history.push_back(rec);
    if (on_epoch && !on_epoch(rec)) break;
  }
  return history;
}

}  // namespace saw
