#pragma once

// Desk-scale cloze corpus. Each document is a run of sentences
// "<entity> <verb> the <object> ." with distinct objects; the query repeats
// one of those sentences with its entity blanked, so the answer is the
// entity of the document sentence sharing the query's verb and object.
// Words are pronounceable pseudo-words built from syllables, which gives BPE
// recurring units to learn.

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "saw/error.hpp"
#include "saw/example.hpp"

namespace saw {

struct SyntheticSpec {
  std::size_t vocab_size = 100;   // entities + verbs + objects + "the" + "."
  std::size_t entity_pool = 30;
  std::size_t doc_min_tokens = 20;
  std::size_t doc_max_tokens = 40;
  std::size_t num_train = 200;
  std::size_t num_valid = 100;
  std::size_t num_test = 100;
  double oov_rate = 0.0;          // share of valid/test answers replaced by unseen words
  std::uint64_t seed = 7;

  static constexpr std::size_t kSentenceTokens = 5;
  static constexpr std::size_t kFunctionWords = 2;

  std::size_t min_sentences() const { return std::max<std::size_t>(1, doc_min_tokens / kSentenceTokens); }
  std::size_t max_sentences() const { return std::max(min_sentences(), doc_max_tokens / kSentenceTokens); }
  std::size_t content_words() const { return vocab_size - entity_pool - kFunctionWords; }
  std::size_t num_verbs() const { return std::max<std::size_t>(1, content_words() / 3); }
  std::size_t num_objects() const { return content_words() - num_verbs(); }

  void validate() const {
    if (entity_pool < 2) throw Error(ErrorKind::invalid_argument, "infeasible spec: entity pool must hold at least 2 entities");
    if (vocab_size < entity_pool + kFunctionWords + 2) {
      throw Error(ErrorKind::invalid_argument, "infeasible spec: vocabulary too small for the entity pool");
    }
    if (doc_min_tokens < 1 || doc_max_tokens < doc_min_tokens) {
      throw Error(ErrorKind::invalid_argument, "infeasible spec: bad document length range");
    }
    if (num_objects() < max_sentences()) {
      throw Error(ErrorKind::invalid_argument, "infeasible spec: not enough object words for the longest document");
    }
    if (num_train < 1) throw Error(ErrorKind::invalid_argument, "infeasible spec: no training examples");
    if (!(oov_rate >= 0.0 && oov_rate <= 1.0)) throw Error(ErrorKind::invalid_argument, "OOV rate must be in [0, 1]");
  }
};

struct DatasetSplits {
  std::vector<ClozeExample> train, valid, test;
};

namespace detail {

class PseudoWords {
 public:
  explicit PseudoWords(std::mt19937_64& rng) : rng_(rng) {}

  /// A new word of `min_syl`..`max_syl` syllables not produced before.
  std::string fresh(std::size_t min_syl, std::size_t max_syl) {
    static constexpr std::string_view kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z",
                                                   "br", "kr", "st", "tr"};
    static constexpr std::string_view kVowels[] = {"a", "e", "i", "o", "u"};
    static constexpr std::string_view kCodas[] = {"", "", "", "n", "r", "s"};
    std::uniform_int_distribution<std::size_t> syl(min_syl, max_syl);
    for (;;) {
      std::string w;
      const std::size_t n = syl(rng_);
      for (std::size_t i = 0; i < n; ++i) {
        w += pick(kOnsets);
        w += pick(kVowels);
        w += pick(kCodas);
      }
      if (used_.insert(w).second) return w;
    }
  }

 private:
  template <std::size_t N>
  std::string_view pick(const std::string_view (&options)[N]) {
    return options[std::uniform_int_distribution<std::size_t>(0, N - 1)(rng_)];
  }

  std::mt19937_64& rng_;
  std::unordered_set<std::string> used_;
};

template <class V>
const typename V::value_type& pick(const V& v, std::mt19937_64& rng) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

}  // namespace detail

/// Deterministic in `spec.seed`. Valid/test answers are drawn only from
/// entities that occur in the training split unless OOV injection replaces
/// them with a word that never occurs there.
inline DatasetSplits generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  detail::PseudoWords words(rng);

  std::vector<std::string> entities, verbs, objects;
  for (std::size_t i = 0; i < spec.entity_pool; ++i) entities.push_back(words.fresh(2, 3));
  for (std::size_t i = 0; i < spec.num_verbs(); ++i) verbs.push_back(words.fresh(1, 2));
  for (std::size_t i = 0; i < spec.num_objects(); ++i) objects.push_back(words.fresh(1, 2));

  auto make = [&](const std::string& id, const std::vector<std::string>& entity_pool) {
    const std::size_t n =
        std::uniform_int_distribution<std::size_t>(spec.min_sentences(), spec.max_sentences())(rng);
    std::vector<std::string> objs = objects;
    std::shuffle(objs.begin(), objs.end(), rng);
    std::vector<std::string> ents = entity_pool;
    std::shuffle(ents.begin(), ents.end(), rng);

    ClozeExample ex;
    ex.id = id;
    std::vector<std::vector<std::string>> sentences;
    for (std::size_t s = 0; s < n; ++s) {
      const std::string& ent = s < ents.size() ? ents[s] : detail::pick(entity_pool, rng);
      sentences.push_back({ent, detail::pick(verbs, rng), "the", objs[s], "."});
    }
    const std::size_t target = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    for (const auto& s : sentences) ex.document.insert(ex.document.end(), s.begin(), s.end());
    ex.query = sentences[target];
    ex.answer = ex.query[0];
    ex.query[0] = std::string(kPlaceholder);
    return ex;
  };

  DatasetSplits splits;
  for (std::size_t i = 0; i < spec.num_train; ++i) splits.train.push_back(make("train-" + std::to_string(i), entities));

  std::set<std::string> seen;
  for (const auto& ex : splits.train) {
    seen.insert(ex.document.begin(), ex.document.end());
    seen.insert(ex.query.begin(), ex.query.end());
  }
  std::vector<std::string> held_out_pool;
  for (const auto& e : entities) {
    if (seen.count(e) != 0) held_out_pool.push_back(e);
  }
  if (held_out_pool.size() < 2) held_out_pool = entities;

  std::bernoulli_distribution inject(spec.oov_rate);
  auto held_out = [&](const std::string& prefix, std::size_t count) {
    std::vector<ClozeExample> out;
    for (std::size_t i = 0; i < count; ++i) {
      auto ex = make(prefix + std::to_string(i), held_out_pool);
      if (inject(rng)) {
        const std::string fresh = words.fresh(3, 4);
        for (auto& tok : ex.document) {
          if (tok == ex.answer) tok = fresh;
        }
        ex.answer = fresh;
      }
      out.push_back(std::move(ex));
    }
    return out;
  };
  splits.valid = held_out("valid-", spec.num_valid);
  splits.test = held_out("test-", spec.num_test);
  return splits;
}

}  // namespace saw
