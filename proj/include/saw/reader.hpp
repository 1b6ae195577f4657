#pragma once

// Subword-augmented gated-attention reader.
//
// Each token w is embedded as AE(w) = WE(w) <op> SE(w), where WE is a row of
// the word table (the shared UNK row for words outside the short list) and
// SE is a dense projection of the final states of a BiGRU run over the
// word's subword embeddings. K layers then follow: document and query are
// each encoded by their own BiGRU, and every document row is gated by an
// attention-weighted average of the query rows. The answer distribution is a
// softmax over inner products between the final document rows and the final
// query state at the placeholder, summed per distinct document word.

#include <cmath>
#include <istream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "saw/example.hpp"
#include "saw/gru.hpp"
#include "saw/ops.hpp"
#include "saw/tensor.hpp"
#include "saw/vocabulary.hpp"

namespace saw {

enum class IntegrationOp { concat, sum, mul };

inline const char* to_string(IntegrationOp op) {
  switch (op) {
    case IntegrationOp::concat: return "concat";
    case IntegrationOp::sum: return "sum";
    case IntegrationOp::mul: return "mul";
  }
  return "?";
}

inline IntegrationOp parse_integration_op(const std::string& s) {
  if (s == "concat") return IntegrationOp::concat;
  if (s == "sum") return IntegrationOp::sum;
  if (s == "mul") return IntegrationOp::mul;
  throw Error(ErrorKind::config, "unknown integration operator '" + s + "' (expected concat, sum or mul)");
}

struct ReaderConfig {
  IntegrationOp integration_op = IntegrationOp::mul;
  std::size_t layers = 3;
  std::size_t hidden = 128;  // GRU units, word and subword encoders alike
  std::size_t word_dim = 200;
  std::size_t subword_dim = 100;
  double gamma = 0.9;
  std::size_t num_merges = 1000;
  double dropout = 0.5;
  double init_scale = 0.05;

  /// Output size of the SE projection: word_dim for sum/mul so that the
  /// element-wise operators are defined, subword_dim for concat.
  std::size_t projection_dim() const {
    return integration_op == IntegrationOp::concat ? subword_dim : word_dim;
  }
  std::size_t embed_dim() const {
    return integration_op == IntegrationOp::concat ? word_dim + projection_dim() : word_dim;
  }

  void validate() const {
    if (layers < 1) throw Error(ErrorKind::config, "layers must be >= 1");
    if (hidden < 1 || word_dim < 1 || subword_dim < 1) throw Error(ErrorKind::config, "dimensions must be >= 1");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw Error(ErrorKind::config, "invalid filter ratio");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw Error(ErrorKind::config, "dropout must be in [0, 1)");
    if (!(init_scale > 0.0)) throw Error(ErrorKind::config, "init_scale must be positive");
  }
};

template <class T>
class ReaderModel {
 public:
  struct Layer {
    BiGruParams<T> doc;
    BiGruParams<T> query;
  };

  ReaderModel() = default;

  ReaderModel(const ReaderConfig& config, std::size_t word_rows, std::size_t subword_rows) : config_(config) {
    config_.validate();
    if (word_rows < 1 || subword_rows < 1) throw Error(ErrorKind::config, "embedding tables need at least one row");
    const std::size_t H = config_.hidden;
    word_embedding = Param<T>({word_rows, config_.word_dim});
    subword_embedding = Param<T>({subword_rows, config_.subword_dim});
    subword_encoder = BiGruParams<T>(config_.subword_dim, H);
    projection_W = Param<T>({config_.projection_dim(), 2 * H});
    projection_b = Param<T>({config_.projection_dim()});
    for (std::size_t k = 0; k < config_.layers; ++k) {
      const std::size_t doc_in = k == 0 ? config_.embed_dim() : 2 * H;
      layers.push_back(Layer{BiGruParams<T>(doc_in, H), BiGruParams<T>(config_.embed_dim(), H)});
    }
  }

  /// Embedding tables uniform in [-init_scale, init_scale]; GRU and
  /// projection weights Glorot-uniform; biases zero, except that the
  /// projection bias starts at 1 under `mul` so that AE(w) starts out close
  /// to WE(w) instead of a product of two small numbers.
  template <class Rng>
  void init(Rng& rng) {
    const double s = config_.init_scale;
    init_uniform(word_embedding.value, s, rng);
    init_uniform(subword_embedding.value, s, rng);
    subword_encoder.init(rng);
    init_glorot(projection_W.value, rng);
    projection_b.value.fill(config_.integration_op == IntegrationOp::mul ? T(1) : T(0));
    for (auto& layer : layers) {
      layer.doc.init(rng);
      layer.query.init(rng);
    }
  }

  void init(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    init(rng);
  }

  /// Named view over every parameter, in a fixed order.
  ParamStore<T> params() {
    ParamStore<T> store;
    auto add = [&store](const std::string& name, Param<T>& p) { store.add(name, p); };
    add("word_embedding", word_embedding);
    add("subword_embedding", subword_embedding);
    subword_encoder.visit("subword_encoder", add);
    add("projection.W", projection_W);
    add("projection.b", projection_b);
    for (std::size_t k = 0; k < layers.size(); ++k) {
      layers[k].doc.visit("layer" + std::to_string(k + 1) + ".doc", add);
      layers[k].query.visit("layer" + std::to_string(k + 1) + ".query", add);
    }
    return store;
  }

  const ReaderConfig& config() const { return config_; }
  std::size_t word_rows() const { return word_embedding.value.rows(); }
  std::size_t subword_rows() const { return subword_embedding.value.rows(); }

  Param<T> word_embedding;
  Param<T> subword_embedding;
  BiGruParams<T> subword_encoder;
  Param<T> projection_W;
  Param<T> projection_b;
  std::vector<Layer> layers;

 private:
  ReaderConfig config_;
};

template <class T>
ReaderModel<T> make_reader(const ReaderConfig& config, const Lexicon& lexicon, std::uint64_t seed) {
  ReaderModel<T> model(config, lexicon.short_list.table_rows(), lexicon.subwords.size());
  model.init(seed);
  return model;
}

// ---------------------------------------------------------------------------
// Subword embedding SE(w)

template <class T>
struct SubwordEncoding {
  Tensor<T> inputs;  // one subword embedding per row
  BiGruResult<T> states;
  Vec<T> finals;     // forward final || backward final
  Vec<T> se;
};

template <class T>
SubwordEncoding<T> encode_subwords(const ReaderModel<T>& model, const std::vector<std::size_t>& subword_indices) {
  if (subword_indices.empty()) throw Error(ErrorKind::invalid_argument, "subword sequence is empty");
  SubwordEncoding<T> enc;
  const auto& table = model.subword_embedding.value;
  enc.inputs = Tensor<T>::matrix(subword_indices.size(), table.cols());
  for (std::size_t i = 0; i < subword_indices.size(); ++i) {
    if (subword_indices[i] >= table.rows()) throw Error(ErrorKind::invalid_argument, "subword index out of range");
    auto src = table.row(subword_indices[i]);
    std::copy(src.begin(), src.end(), enc.inputs.row(i).begin());
  }
  enc.states = bigru(enc.inputs, model.subword_encoder);
  enc.finals = enc.states.fwd_final;
  enc.finals.insert(enc.finals.end(), enc.states.bwd_final.begin(), enc.states.bwd_final.end());
  enc.se = ops::dense<T>(enc.finals, model.projection_W.value, model.projection_b.value);
  return enc;
}

template <class T>
Vec<T> subword_embed(const ReaderModel<T>& model, const std::vector<std::size_t>& subword_indices) {
  return encode_subwords(model, subword_indices).se;
}

template <class T>
Vec<T> subword_embed(const ReaderModel<T>& model, const Lexicon& lexicon, const std::string& word) {
  return subword_embed(model, index_subwords(word, lexicon.merges, lexicon.subwords));
}

// ---------------------------------------------------------------------------
// Augmented embedding AE(w) = WE(w) <op> SE(w)

template <class T>
Vec<T> integrate(std::span<const T> we, std::span<const T> se, IntegrationOp op) {
  if (op == IntegrationOp::concat) {
    Vec<T> out(we.begin(), we.end());
    out.insert(out.end(), se.begin(), se.end());
    return out;
  }
  if (we.size() != se.size()) {
    throw Error(ErrorKind::config, std::string("integration operator '") + to_string(op) +
                                       "' needs the subword projection size (" + std::to_string(se.size()) +
                                       ") to equal the word embedding size (" + std::to_string(we.size()) + ")");
  }
  Vec<T> out(we.size());
  for (std::size_t i = 0; i < we.size(); ++i) out[i] = op == IntegrationOp::sum ? we[i] + se[i] : we[i] * se[i];
  return out;
}

/// Splits dL/dAE into dL/dWE (added into `d_we`) and dL/dSE (added into `d_se`).
template <class T>
void integrate_backward(std::span<const T> we, std::span<const T> se, std::span<const T> d_ae, IntegrationOp op,
                        std::span<T> d_we, std::span<T> d_se) {
  const std::size_t n = we.size();
  switch (op) {
    case IntegrationOp::concat:
      for (std::size_t i = 0; i < n; ++i) d_we[i] += d_ae[i];
      for (std::size_t i = 0; i < se.size(); ++i) d_se[i] += d_ae[n + i];
      break;
    case IntegrationOp::sum:
      for (std::size_t i = 0; i < n; ++i) {
        d_we[i] += d_ae[i];
        d_se[i] += d_ae[i];
      }
      break;
    case IntegrationOp::mul:
      for (std::size_t i = 0; i < n; ++i) {
        d_we[i] += d_ae[i] * se[i];
        d_se[i] += d_ae[i] * we[i];
      }
      break;
  }
}

template <class T>
Vec<T> augment(const ReaderModel<T>& model, const TokenIndexing& token, IntegrationOp op) {
  const auto& table = model.word_embedding.value;
  if (token.word_index >= table.rows()) throw Error(ErrorKind::invalid_argument, "word index out of range");
  const Vec<T> se = subword_embed(model, token.subword_indices);
  return integrate<T>(table.row(token.word_index), se, op);
}

template <class T>
Vec<T> augment(const ReaderModel<T>& model, const Lexicon& lexicon, const std::string& word, IntegrationOp op) {
  return augment(model, lexicon.index(word), op);
}

template <class T>
Vec<T> augment(const ReaderModel<T>& model, const Lexicon& lexicon, const std::string& word) {
  return augment(model, lexicon, word, model.config().integration_op);
}

/// AE per token, then a BiGRU. Rows = tokens, columns = 2 * hidden.
template <class T>
Tensor<T> encode(const ReaderModel<T>& model, const Lexicon& lexicon, const std::vector<std::string>& tokens,
                 const BiGruParams<T>& encoder) {
  if (tokens.empty()) throw Error(ErrorKind::invalid_argument, "encode: empty token sequence");
  Tensor<T> inputs = Tensor<T>::matrix(tokens.size(), model.config().embed_dim());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const auto ae = augment(model, lexicon, tokens[t]);
    std::copy(ae.begin(), ae.end(), inputs.row(t).begin());
  }
  return bigru(inputs, encoder).out;
}

// ---------------------------------------------------------------------------
// Gated attention

template <class T>
struct GatedAttention {
  Tensor<T> alpha;  // document rows x query rows
  Tensor<T> beta;   // document rows x width
  Tensor<T> x;      // document rows x width
};

/// alpha_i = softmax(H_q d_i), beta_i = H_q^T alpha_i, x_i = d_i * beta_i.
template <class T>
GatedAttention<T> gated_attention_layer(const Tensor<T>& doc, const Tensor<T>& query) {
  ops::require(doc.rank() == 2 && query.rank() == 2 && doc.cols() == query.cols(),
               "gated attention: document width " + std::to_string(doc.cols()) + " differs from query width " +
                   std::to_string(query.cols()));
  ops::require(doc.rows() > 0 && query.rows() > 0, "gated attention: empty input");
  const std::size_t kd = doc.rows(), kq = query.rows(), w = doc.cols();
  GatedAttention<T> ga{Tensor<T>::matrix(kd, kq), Tensor<T>::matrix(kd, w), Tensor<T>::matrix(kd, w)};
  Vec<T> scores(kq);
  for (std::size_t i = 0; i < kd; ++i) {
    for (std::size_t j = 0; j < kq; ++j) scores[j] = ops::dot<T>(query.row(j), doc.row(i));
    const auto a = ops::softmax<T>(scores);
    std::copy(a.begin(), a.end(), ga.alpha.row(i).begin());
    auto beta = ga.beta.row(i);
    for (std::size_t j = 0; j < kq; ++j) ops::axpy<T>(a[j], query.row(j), beta);
    auto d = doc.row(i);
    auto x = ga.x.row(i);
    for (std::size_t c = 0; c < w; ++c) x[c] = d[c] * beta[c];
  }
  return ga;
}

/// Adds dL/d(doc) and dL/d(query) given dL/dx.
template <class T>
void gated_attention_backward(const Tensor<T>& doc, const Tensor<T>& query, const GatedAttention<T>& ga,
                              const Tensor<T>& d_x, Tensor<T>& d_doc, Tensor<T>& d_query) {
  const std::size_t kd = doc.rows(), kq = query.rows(), w = doc.cols();
  Vec<T> d_beta(w), d_alpha(kq);
  for (std::size_t i = 0; i < kd; ++i) {
    auto d = doc.row(i);
    auto beta = ga.beta.row(i);
    auto dx = d_x.row(i);
    auto dd = d_doc.row(i);
    for (std::size_t c = 0; c < w; ++c) {
      dd[c] += dx[c] * beta[c];
      d_beta[c] = dx[c] * d[c];
    }
    auto alpha = ga.alpha.row(i);
    for (std::size_t j = 0; j < kq; ++j) {
      d_alpha[j] = ops::dot<T>(ops::cspan(d_beta), query.row(j));
      ops::axpy<T>(alpha[j], ops::cspan(d_beta), d_query.row(j));
    }
    const auto d_scores = ops::softmax_backward<T>(alpha, d_alpha);
    for (std::size_t j = 0; j < kq; ++j) {
      ops::axpy<T>(d_scores[j], query.row(j), dd);
      ops::axpy<T>(d_scores[j], d, d_query.row(j));
    }
  }
}

// ---------------------------------------------------------------------------
// Answer prediction

struct Candidate {
  std::string word;
  double prob = 0.0;
  std::size_t first_position = 0;
  std::vector<std::size_t> positions;
};

struct AnswerDistribution {
  std::vector<double> per_position;
  std::vector<Candidate> candidates;  // in order of first occurrence

  const Candidate* find(const std::string& word) const {
    for (const auto& c : candidates) {
      if (c.word == word) return &c;
    }
    return nullptr;
  }

  double prob(const std::string& word) const {
    const auto* c = find(word);
    return c == nullptr ? 0.0 : c->prob;
  }

  /// Candidates by descending probability, ties by first position.
  std::vector<Candidate> ranked() const {
    auto out = candidates;
    std::stable_sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) { return a.prob > b.prob; });
    return out;
  }
};

/// Sums per-position probabilities over the positions of each distinct word.
template <class P>
AnswerDistribution aggregate(const std::vector<std::string>& doc_words, const std::vector<P>& p) {
  if (doc_words.size() != p.size()) throw Error(ErrorKind::dimension_mismatch, "aggregate: size mismatch");
  AnswerDistribution dist;
  dist.per_position.assign(p.begin(), p.end());
  std::unordered_map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < doc_words.size(); ++i) {
    auto [it, inserted] = slot.emplace(doc_words[i], dist.candidates.size());
    if (inserted) dist.candidates.push_back(Candidate{doc_words[i], 0.0, i, {}});
    auto& c = dist.candidates[it->second];
    c.prob += static_cast<double>(p[i]);
    c.positions.push_back(i);
  }
  return dist;
}

/// p = softmax(H_D q_t), aggregated over the candidate set of document words.
template <class T>
AnswerDistribution predict(const Tensor<T>& doc_final, std::span<const T> anchor,
                           const std::vector<std::string>& doc_words) {
  ops::require(doc_final.cols() == anchor.size(), "predict: query anchor size differs from document width");
  Vec<T> scores(doc_final.rows());
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = ops::dot<T>(doc_final.row(i), anchor);
  return aggregate(doc_words, ops::softmax<T>(scores));
}

/// Highest-probability candidate; ties go to the earliest first occurrence.
inline std::string answer(const AnswerDistribution& dist) {
  if (dist.candidates.empty()) throw Error(ErrorKind::invalid_argument, "answer: empty distribution");
  const Candidate* best = &dist.candidates.front();
  for (const auto& c : dist.candidates) {
    if (c.prob > best->prob || (c.prob == best->prob && c.first_position < best->first_position)) best = &c;
  }
  return best->word;
}

// ---------------------------------------------------------------------------
// Full forward / backward

/// Token indices for one example, computed once and reused across epochs.
struct EncodedExample {
  std::string id;
  std::vector<std::string> doc_words;
  std::vector<std::string> query_words;
  std::vector<TokenIndexing> doc;
  std::vector<TokenIndexing> query;
  std::size_t placeholder = 0;
  std::string answer;
};

inline EncodedExample encode_example(const Lexicon& lexicon, const ClozeExample& ex) {
  if (ex.document.empty()) throw Error(ErrorKind::data, "example '" + ex.id + "': empty document");
  EncodedExample enc;
  enc.id = ex.id;
  enc.doc_words = ex.document;
  enc.query_words = ex.query;
  enc.placeholder = placeholder_position(ex.query);
  enc.answer = ex.answer;
  std::unordered_map<std::string, TokenIndexing> cache;
  auto lookup = [&](const std::string& w) -> const TokenIndexing& {
    auto it = cache.find(w);
    if (it == cache.end()) it = cache.emplace(w, lexicon.index(w)).first;
    return it->second;
  };
  for (const auto& w : ex.document) enc.doc.push_back(lookup(w));
  for (const auto& w : ex.query) enc.query.push_back(lookup(w));
  return enc;
}

template <class T>
struct LayerTrace {
  Tensor<T> doc_in, query_in;  // after dropout
  ops::DropoutMask<T> doc_mask, query_mask;
  BiGruResult<T> doc, query;
  GatedAttention<T> gate;
};

template <class T>
struct ForwardTrace {
  struct Slot {
    TokenIndexing token;
    SubwordEncoding<T> subwords;
  };
  std::vector<Slot> slots;  // one per distinct word in document + query
  std::vector<std::size_t> doc_slot, query_slot;
  Tensor<T> doc_ae, query_ae;
  std::vector<LayerTrace<T>> layers;
  std::size_t placeholder = 0;
  Vec<T> anchor;
  Vec<T> p;
  AnswerDistribution dist;
};

namespace detail {

template <class T>
Tensor<T> embed_rows(const ReaderModel<T>& model, const ForwardTrace<T>& tr, const std::vector<std::size_t>& slots) {
  const auto op = model.config().integration_op;
  Tensor<T> out = Tensor<T>::matrix(slots.size(), model.config().embed_dim());
  for (std::size_t t = 0; t < slots.size(); ++t) {
    const auto& slot = tr.slots[slots[t]];
    const auto ae = integrate<T>(model.word_embedding.value.row(slot.token.word_index), ops::cspan(slot.subwords.se), op);
    std::copy(ae.begin(), ae.end(), out.row(t).begin());
  }
  return out;
}

template <class T, class Rng>
Tensor<T> with_dropout(const Tensor<T>& in, double rate, Mode mode, Rng* rng, ops::DropoutMask<T>& mask) {
  if (mode == Mode::train && rate > 0.0) {
    if (rng == nullptr) throw Error(ErrorKind::invalid_argument, "train-mode dropout needs a random generator");
    mask = ops::make_dropout_mask<T>(in.size(), rate, mode, *rng);
  }
  Tensor<T> out = in;
  ops::apply_mask<T>(mask, out.span());
  return out;
}

}  // namespace detail

/// Runs the reader on one example. In train mode, dropout with the
/// configured rate is applied to every layer's document and query inputs.
template <class T, class Rng = std::mt19937_64>
ForwardTrace<T> forward(const ReaderModel<T>& model, const EncodedExample& ex, Mode mode = Mode::eval,
                        Rng* rng = nullptr) {
  if (ex.doc.empty()) throw Error(ErrorKind::data, "example '" + ex.id + "': empty document");
  if (ex.query.empty() || ex.placeholder >= ex.query.size()) {
    throw Error(ErrorKind::data, "example '" + ex.id + "': bad placeholder");
  }
  const auto& cfg = model.config();
  ForwardTrace<T> tr;
  tr.placeholder = ex.placeholder;

  std::map<std::pair<std::size_t, std::vector<std::size_t>>, std::size_t> slot_of;
  auto slot_for = [&](const TokenIndexing& tok) {
    auto key = std::make_pair(tok.word_index, tok.subword_indices);
    auto it = slot_of.find(key);
    if (it != slot_of.end()) return it->second;
    if (tok.word_index >= model.word_rows()) throw Error(ErrorKind::invalid_argument, "word index out of range");
    tr.slots.push_back({tok, encode_subwords(model, tok.subword_indices)});
    slot_of.emplace(std::move(key), tr.slots.size() - 1);
    return tr.slots.size() - 1;
  };
  for (const auto& tok : ex.doc) tr.doc_slot.push_back(slot_for(tok));
  for (const auto& tok : ex.query) tr.query_slot.push_back(slot_for(tok));

  tr.doc_ae = detail::embed_rows(model, tr, tr.doc_slot);
  tr.query_ae = detail::embed_rows(model, tr, tr.query_slot);

  tr.layers.resize(cfg.layers);
  for (std::size_t k = 0; k < cfg.layers; ++k) {
    auto& lt = tr.layers[k];
    const auto& params = model.layers[k];
    lt.doc_in = detail::with_dropout(k == 0 ? tr.doc_ae : tr.layers[k - 1].gate.x, cfg.dropout, mode, rng, lt.doc_mask);
    lt.query_in = detail::with_dropout(tr.query_ae, cfg.dropout, mode, rng, lt.query_mask);
    lt.doc = bigru(lt.doc_in, params.doc);
    lt.query = bigru(lt.query_in, params.query);
    lt.gate = gated_attention_layer(lt.doc.out, lt.query.out);
  }

  const auto& last = tr.layers.back();
  auto anchor = last.query.out.row(ex.placeholder);
  tr.anchor.assign(anchor.begin(), anchor.end());
  Vec<T> scores(ex.doc.size());
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = ops::dot<T>(last.gate.x.row(i), ops::cspan(tr.anchor));
  tr.p = ops::softmax<T>(scores);
  for (T v : tr.p) {
    if (!std::isfinite(v)) throw Error(ErrorKind::numeric, "example '" + ex.id + "': non-finite probability");
  }
  tr.dist = aggregate(ex.doc_words, tr.p);
  return tr;
}

template <class T, class Rng = std::mt19937_64>
ForwardTrace<T> forward(const ReaderModel<T>& model, const Lexicon& lexicon, const ClozeExample& ex,
                        Mode mode = Mode::eval, Rng* rng = nullptr) {
  return forward<T, Rng>(model, encode_example(lexicon, ex), mode, rng);
}

inline constexpr double kProbFloor = 1e-12;

/// Backpropagates scale * -log P(answer | D, Q) into the model's gradient
/// slots and returns the unscaled loss.
template <class T>
double backward(ReaderModel<T>& model, const ForwardTrace<T>& tr, const std::string& answer_word, T scale = T(1)) {
  const auto* cand = tr.dist.find(answer_word);
  if (cand == nullptr) throw Error(ErrorKind::data, "unanswerable example: '" + answer_word + "' is not in the document");
  T prob = T(0);
  for (std::size_t i : cand->positions) prob += tr.p[i];
  const double loss = -std::log(std::max(static_cast<double>(prob), kProbFloor));
  if (static_cast<double>(prob) < kProbFloor) return loss;  // floored: constant, zero gradient

  const auto& cfg = model.config();
  const std::size_t kd = tr.doc_slot.size(), kq = tr.query_slot.size();
  const std::size_t width = 2 * cfg.hidden;

  Vec<T> dp(kd, T(0));
  for (std::size_t i : cand->positions) dp[i] = -scale / prob;
  const auto ds = ops::softmax_backward<T>(tr.p, dp);

  const auto& last = tr.layers.back();
  Tensor<T> d_x = Tensor<T>::matrix(kd, width);
  Vec<T> d_anchor(width, T(0));
  for (std::size_t i = 0; i < kd; ++i) {
    ops::axpy<T>(ds[i], ops::cspan(tr.anchor), d_x.row(i));
    ops::axpy<T>(ds[i], last.gate.x.row(i), d_anchor);
  }

  Tensor<T> d_doc_ae, d_query_ae = Tensor<T>::matrix(kq, cfg.embed_dim());
  for (std::size_t k = cfg.layers; k-- > 0;) {
    const auto& lt = tr.layers[k];
    auto& params = model.layers[k];
    Tensor<T> d_doc = Tensor<T>::matrix(kd, width);
    Tensor<T> d_query = Tensor<T>::matrix(kq, width);
    gated_attention_backward(lt.doc.out, lt.query.out, lt.gate, d_x, d_doc, d_query);
    if (k + 1 == cfg.layers) ops::axpy<T>(T(1), ops::cspan(d_anchor), d_query.row(tr.placeholder));

    Tensor<T> d_query_in = bigru_backward<T>(lt.query, d_query, {}, {}, params.query);
    ops::apply_mask<T>(lt.query_mask, d_query_in.span());
    ops::axpy<T>(T(1), d_query_in.span(), d_query_ae.span());

    Tensor<T> d_doc_in = bigru_backward<T>(lt.doc, d_doc, {}, {}, params.doc);
    ops::apply_mask<T>(lt.doc_mask, d_doc_in.span());
    if (k == 0) {
      d_doc_ae = std::move(d_doc_in);
    } else {
      d_x = std::move(d_doc_in);
    }
  }

  // Embedding layer: route dAE to the word table and to each slot's SE.
  std::vector<Vec<T>> d_se(tr.slots.size());
  for (std::size_t s = 0; s < tr.slots.size(); ++s) d_se[s].assign(tr.slots[s].subwords.se.size(), T(0));
  auto route = [&](const Tensor<T>& d_ae, const std::vector<std::size_t>& slots) {
    for (std::size_t t = 0; t < slots.size(); ++t) {
      const auto& slot = tr.slots[slots[t]];
      const std::size_t row = slot.token.word_index;
      integrate_backward<T>(model.word_embedding.value.row(row), ops::cspan(slot.subwords.se), d_ae.row(t),
                            cfg.integration_op, model.word_embedding.grad.row(row), d_se[slots[t]]);
    }
  };
  route(d_doc_ae, tr.doc_slot);
  route(d_query_ae, tr.query_slot);

  const std::size_t H = cfg.hidden;
  for (std::size_t s = 0; s < tr.slots.size(); ++s) {
    const auto& enc = tr.slots[s].subwords;
    const auto d_finals = ops::dense_backward<T>(ops::cspan(enc.finals), ops::cspan(d_se[s]), model.projection_W.value,
                                                 model.projection_W.grad, model.projection_b.grad);
    const std::span<const T> d_all(d_finals);
    const Tensor<T> d_inputs =
        bigru_backward<T>(enc.states, Tensor<T>{}, d_all.first(H), d_all.subspan(H, H), model.subword_encoder);
    const auto& ids = tr.slots[s].token.subword_indices;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      ops::axpy<T>(T(1), d_inputs.row(i), model.subword_embedding.grad.row(ids[i]));
    }
  }
  return loss;
}

/// Forward in eval mode followed by -log P(answer); no gradients.
template <class T>
double example_loss(const ReaderModel<T>& model, const EncodedExample& ex) {
  const auto tr = forward<T>(model, ex, Mode::eval);
  const auto* cand = tr.dist.find(ex.answer);
  if (cand == nullptr) throw Error(ErrorKind::data, "unanswerable example '" + ex.id + "'");
  double prob = 0.0;
  for (std::size_t i : cand->positions) prob += static_cast<double>(tr.p[i]);
  return -std::log(std::max(prob, kProbFloor));
}

// ---------------------------------------------------------------------------

/// Loads word vectors in word2vec text format ("word v1 ... vd" per line, an
/// optional "count dim" header) into the rows of short-list words. Returns
/// the number of rows filled.
template <class T>
std::size_t load_word_vectors(std::istream& in, ReaderModel<T>& model, const Lexicon& lexicon) {
  const std::size_t dim = model.config().word_dim;
  std::string line;
  std::size_t line_no = 0, filled = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string word;
    if (!(fields >> word)) continue;
    std::vector<double> values;
    double v = 0.0;
    while (fields >> v) values.push_back(v);
    if (line_no == 1 && values.size() == 1) continue;  // "count dim" header
    if (values.size() != dim) {
      throw Error(ErrorKind::data, "word vectors line " + std::to_string(line_no) + ": expected " + std::to_string(dim) +
                                       " values, found " + std::to_string(values.size()));
    }
    if (!lexicon.short_list.contains(word)) continue;
    auto row = model.word_embedding.value.row(lexicon.short_list.index_word(word));
    for (std::size_t i = 0; i < dim; ++i) row[i] = static_cast<T>(values[i]);
    ++filled;
  }
  return filled;
}

}  // namespace saw
