#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "saw/bpe.hpp"
#include "saw/error.hpp"

namespace saw {

/// Word table ordered by descending frequency, ties by first occurrence.
class Vocabulary {
 public:
  Vocabulary() = default;

  /// Builds from entries already in vocabulary order.
  static Vocabulary from_entries(std::vector<std::pair<std::string, std::int64_t>> entries) {
    Vocabulary v;
    for (auto& [word, count] : entries) {
      if (v.rank_.count(word) != 0) throw Error(ErrorKind::data, "duplicate vocabulary word '" + word + "'");
      if (!v.words_.empty() && count > v.counts_.back()) {
        throw Error(ErrorKind::data, "vocabulary entries are not in descending frequency order at '" + word + "'");
      }
      v.rank_.emplace(word, v.words_.size());
      v.words_.push_back(std::move(word));
      v.counts_.push_back(count);
    }
    return v;
  }

  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  const std::string& word(std::size_t rank) const { return words_.at(rank); }
  std::int64_t count(std::size_t rank) const { return counts_.at(rank); }

  std::int64_t frequency(const std::string& word) const {
    auto it = rank_.find(word);
    return it == rank_.end() ? 0 : counts_[it->second];
  }

  /// Rank of `word`, or size() when absent.
  std::size_t rank(const std::string& word) const {
    auto it = rank_.find(word);
    return it == rank_.end() ? words_.size() : it->second;
  }

  bpe::WordFreqTable to_freq_table() const {
    bpe::WordFreqTable table;
    for (std::size_t i = 0; i < words_.size(); ++i) table[words_[i]] = counts_[i];
    return table;
  }

 private:
  std::vector<std::string> words_;
  std::vector<std::int64_t> counts_;
  std::unordered_map<std::string, std::size_t> rank_;
};

template <class Corpus>
Vocabulary build_vocab(const Corpus& sequences) {
  std::unordered_map<std::string, std::size_t> slot;
  std::vector<std::pair<std::string, std::int64_t>> entries;
  for (const auto& sequence : sequences) {
    for (const auto& token : sequence) {
      auto [it, inserted] = slot.emplace(token, entries.size());
      if (inserted) entries.emplace_back(token, 0);
      ++entries[it->second].second;
    }
  }
  if (entries.empty()) throw Error(ErrorKind::invalid_argument, "empty corpus");
  // Entries are in first-occurrence order; a stable sort keeps that as the
  // tie-break.
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return Vocabulary::from_entries(std::move(entries));
}

/// The short list H: the top max(1, floor(gamma * s)) vocabulary words keep
/// their own embedding row; every other word shares the UNK row.
class ShortList {
 public:
  ShortList() = default;

  ShortList(const Vocabulary& vocab, double gamma) : gamma_(gamma) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw Error(ErrorKind::invalid_argument, "invalid filter ratio");
    if (vocab.size() == 0) throw Error(ErrorKind::invalid_argument, "empty corpus");
    // The epsilon absorbs representation error such as 0.3 * 10 = 2.9999...
    const auto kept = static_cast<std::size_t>(std::floor(gamma * static_cast<double>(vocab.size()) + 1e-9));
    kept_ = std::max<std::size_t>(1, std::min(kept, vocab.size()));
    for (std::size_t i = 0; i < kept_; ++i) index_.emplace(vocab.word(i), i);
  }

  double gamma() const { return gamma_; }
  std::size_t size() const { return kept_; }
  std::size_t unk_index() const { return kept_; }
  /// Rows needed by the word embedding table (kept words plus UNK).
  std::size_t table_rows() const { return kept_ + 1; }

  bool contains(const std::string& word) const { return index_.count(word) != 0; }

  std::size_t index_word(const std::string& word) const {
    auto it = index_.find(word);
    return it == index_.end() ? unk_index() : it->second;
  }

 private:
  double gamma_ = 1.0;
  std::size_t kept_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
};

inline ShortList build_short_list(const Vocabulary& vocab, double gamma) { return ShortList(vocab, gamma); }

inline std::size_t index_word(const std::string& word, const ShortList& short_list) {
  return short_list.index_word(word);
}

/// Subword indices are always computed from the original spelling, whether
/// or not the word itself is in the short list.
inline std::vector<std::size_t> index_subwords(const std::string& word, const bpe::MergeTable& table,
                                               const bpe::SubwordVocab& subwords) {
  const auto seg = bpe::segment_word(word, table);
  std::vector<std::size_t> out;
  out.reserve(seg.subwords.size());
  for (const auto& unit : seg.subwords) out.push_back(subwords.index_of(unit));
  return out;
}

struct TokenIndexing {
  std::size_t word_index = 0;
  std::vector<std::size_t> subword_indices;

  bool operator==(const TokenIndexing&) const = default;
};

/// Everything needed to turn a token string into model indices.
struct Lexicon {
  Vocabulary vocab;
  ShortList short_list;
  bpe::MergeTable merges;
  bpe::SubwordVocab subwords;

  /// Builds the word vocabulary, short list, merge table and subword table
  /// from training-split token sequences only.
  template <class Corpus>
  static Lexicon build(const Corpus& training_sequences, double gamma, std::size_t num_merges) {
    Lexicon lex;
    lex.vocab = build_vocab(training_sequences);
    lex.short_list = ShortList(lex.vocab, gamma);
    const auto freqs = lex.vocab.to_freq_table();
    lex.merges = bpe::train_bpe(freqs, num_merges);
    lex.subwords = bpe::build_subword_vocab(freqs, lex.merges);
    return lex;
  }

  TokenIndexing index(const std::string& word) const {
    return TokenIndexing{short_list.index_word(word), index_subwords(word, merges, subwords)};
  }

  bool is_oov(const std::string& word) const { return !short_list.contains(word); }
};

// ---------------------------------------------------------------------------
// Vocabulary file: "word<TAB>count" per line in vocabulary order.
// Short list file: the same, preceded by a "#gamma<TAB><value>" header line.

inline void write_vocabulary(std::ostream& out, const Vocabulary& vocab) {
  for (std::size_t i = 0; i < vocab.size(); ++i) out << vocab.word(i) << '\t' << vocab.count(i) << '\n';
}

inline Vocabulary read_vocabulary(std::istream& in) {
  std::vector<std::pair<std::string, std::int64_t>> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos || tab == 0) {
      throw Error(ErrorKind::data, "vocabulary line " + std::to_string(line_no) + ": expected 'word<TAB>count'");
    }
    try {
      entries.emplace_back(line.substr(0, tab), std::stoll(line.substr(tab + 1)));
    } catch (const std::invalid_argument&) {
      throw Error(ErrorKind::data, "vocabulary line " + std::to_string(line_no) + ": bad count");
    }
  }
  return Vocabulary::from_entries(std::move(entries));
}

inline void write_short_list(std::ostream& out, const Vocabulary& vocab, const ShortList& short_list) {
  out << "#gamma\t" << std::setprecision(17) << short_list.gamma() << '\n';
  write_vocabulary(out, vocab);
}

/// Returns the vocabulary and the short list rebuilt from it.
inline std::pair<Vocabulary, ShortList> read_short_list(std::istream& in) {
  std::string header;
  if (!std::getline(in, header) || header.rfind("#gamma\t", 0) != 0) {
    throw Error(ErrorKind::data, "short list: missing '#gamma<TAB>value' header");
  }
  double gamma = 0.0;
  try {
    gamma = std::stod(header.substr(7));
  } catch (const std::exception&) {
    throw Error(ErrorKind::data, "short list: bad gamma header '" + header + "'");
  }
  Vocabulary vocab = read_vocabulary(in);
  ShortList sl(vocab, gamma);
  return {std::move(vocab), std::move(sl)};
}

}  // namespace saw
