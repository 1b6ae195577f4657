#pragma once

// End-to-end helpers: lexicon from the training split, model construction,
// training and evaluation.

#include <string>
#include <vector>

#include "saw/dataset.hpp"
#include "saw/evaluate.hpp"
#include "saw/reader.hpp"
#include "saw/synthetic.hpp"
#include "saw/training.hpp"

namespace saw {

inline std::vector<EncodedExample> encode_all(const Lexicon& lexicon, const std::vector<ClozeExample>& examples) {
  std::vector<EncodedExample> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(encode_example(lexicon, ex));
  return out;
}

/// The vocabulary, short list and merge table come from the training split
/// only.
inline Lexicon build_lexicon(const std::vector<ClozeExample>& train, const ReaderConfig& config) {
  return Lexicon::build(token_sequences(train), config.gamma, config.num_merges);
}

template <class T>
struct TrainedReader {
  Lexicon lexicon;
  ReaderModel<T> model;
  TrainHistory history;
};

/// Builds the lexicon, initializes a model from `train_config.seed` and
/// trains it, tracking accuracy on `valid`.
template <class T>
TrainedReader<T> fit(const ReaderConfig& reader_config, const TrainConfig& train_config,
                     const std::vector<ClozeExample>& train_split, const std::vector<ClozeExample>& valid,
                     const EpochCallback& on_epoch = {}) {
  TrainedReader<T> out;
  out.lexicon = build_lexicon(train_split, reader_config);
  out.model = make_reader<T>(reader_config, out.lexicon, train_config.seed);
  out.history = train(out.model, encode_all(out.lexicon, train_split), encode_all(out.lexicon, valid), train_config,
                      on_epoch);
  return out;
}

}  // namespace saw
