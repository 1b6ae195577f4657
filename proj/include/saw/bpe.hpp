#pragma once

// Character-level byte pair encoding: learning merge rules from a word
// frequency table and segmenting words with a learned table. Subwords are
// contiguous character n-grams of a single word; no merge crosses a word
// boundary and no end-of-word marker is used.

#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "saw/error.hpp"
#include "saw/utf8.hpp"

namespace saw::bpe {

/// Word -> occurrence count. An ordered map keeps every derived computation
/// independent of hash iteration order.
using WordFreqTable = std::map<std::string, std::int64_t>;

using SymbolPair = std::pair<std::string, std::string>;
using PairCounts = std::map<SymbolPair, std::int64_t>;

inline void validate(const WordFreqTable& words) {
  for (const auto& [word, count] : words) {
    if (word.empty()) throw Error(ErrorKind::invalid_argument, "word frequency table contains an empty word");
    if (utf8::has_whitespace(word)) {
      throw Error(ErrorKind::invalid_argument, "word contains whitespace: '" + word + "'");
    }
    if (count < 1) throw Error(ErrorKind::invalid_argument, "non-positive count for word '" + word + "'");
  }
}

struct MergeRule {
  std::string left;
  std::string right;
  std::size_t rank = 0;

  std::string merged() const { return left + right; }
  bool operator==(const MergeRule&) const = default;
};

/// Ordered merge rules. Rule ranks are their positions in the table.
class MergeTable {
 public:
  MergeTable() = default;

  /// Appends a rule. The same pair may appear at more than one rank: a merge
  /// product reachable through two different merge paths can re-form a pair
  /// that was already merged.
  void add(std::string left, std::string right) {
    if (left.empty() || right.empty()) {
      throw Error(ErrorKind::invalid_argument, "merge rule operands must be non-empty");
    }
    const std::size_t rank = rules_.size();
    ranks_[SymbolPair{left, right}].push_back(rank);
    rules_.push_back(MergeRule{std::move(left), std::move(right), rank});
  }

  const std::vector<MergeRule>& rules() const { return rules_; }
  std::size_t num_merges() const { return rules_.size(); }
  bool empty() const { return rules_.empty(); }

  /// Smallest rank of a rule merging (left, right) that is strictly greater
  /// than `after` (any rank when `after` is npos), or npos when there is none.
  std::size_t next_rank(const std::string& left, const std::string& right, std::size_t after = npos) const {
    auto it = ranks_.find(SymbolPair{left, right});
    if (it == ranks_.end()) return npos;
    for (std::size_t r : it->second) {
      if (after == npos || r > after) return r;
    }
    return npos;
  }

  bool operator==(const MergeTable& other) const { return rules_ == other.rules_; }

  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

 private:
  std::vector<MergeRule> rules_;
  std::map<SymbolPair, std::vector<std::size_t>> ranks_;
};

struct Segmentation {
  std::string word;
  std::vector<std::string> subwords;
};

namespace detail {

// Adds `weight` times the count of every adjacent pair in `symbols`. A run of
// identical symbols x x x contributes floor(run / 2) occurrences of (x, x),
// matching how a merge consumes positions left to right.
inline void accumulate_pairs(const std::vector<std::string>& symbols, std::int64_t weight,
                             PairCounts& counts) {
  bool prev_counted_same = false;
  for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
    const bool same = symbols[i] == symbols[i + 1];
    if (same && prev_counted_same && symbols[i - 1] == symbols[i]) {
      prev_counted_same = false;
      continue;
    }
    auto& slot = counts[SymbolPair{symbols[i], symbols[i + 1]}];
    slot += weight;
    prev_counted_same = same;
  }
}

inline bool contains_pair(const std::vector<std::string>& symbols, const SymbolPair& pair) {
  for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
    if (symbols[i] == pair.first && symbols[i + 1] == pair.second) return true;
  }
  return false;
}

// Replaces every non-overlapping occurrence of `pair`, scanning left to right.
inline std::vector<std::string> merge_pair(const std::vector<std::string>& symbols, const SymbolPair& pair) {
  std::vector<std::string> out;
  out.reserve(symbols.size());
  std::size_t i = 0;
  while (i < symbols.size()) {
    if (i + 1 < symbols.size() && symbols[i] == pair.first && symbols[i + 1] == pair.second) {
      out.push_back(pair.first + pair.second);
      i += 2;
    } else {
      out.push_back(symbols[i]);
      ++i;
    }
  }
  return out;
}

}  // namespace detail

/// Per-word segmentation state used while learning merges.
struct SegmentedCorpus {
  std::vector<std::vector<std::string>> symbols;
  std::vector<std::int64_t> freqs;

  static SegmentedCorpus characters(const WordFreqTable& words) {
    SegmentedCorpus corpus;
    for (const auto& [word, count] : words) {
      corpus.symbols.push_back(utf8::split_chars(word));
      corpus.freqs.push_back(count);
    }
    return corpus;
  }
};

/// Frequency-weighted counts of adjacent subword pairs under the current
/// segmentation of every word.
inline PairCounts count_bigrams(const SegmentedCorpus& corpus) {
  PairCounts counts;
  for (std::size_t w = 0; w < corpus.symbols.size(); ++w) {
    detail::accumulate_pairs(corpus.symbols[w], corpus.freqs[w], counts);
  }
  return counts;
}

inline PairCounts count_bigrams(const WordFreqTable& words) {
  return count_bigrams(SegmentedCorpus::characters(words));
}

/// Learns up to `num_merges` rules. Each rule is the highest-count pair under
/// the segmentation produced by the previous rules; equal counts go to the
/// lexicographically smallest (left, right). Stops early once no pair is left.
inline MergeTable train_bpe(const WordFreqTable& words, std::size_t num_merges) {
  validate(words);
  SegmentedCorpus corpus = SegmentedCorpus::characters(words);
  PairCounts counts = count_bigrams(corpus);
  MergeTable table;

  while (table.num_merges() < num_merges) {
    // std::map iterates in key order, so the first strict maximum is the
    // lexicographically smallest pair among the tied ones.
    const SymbolPair* best = nullptr;
    std::int64_t best_count = 0;
    for (const auto& [pair, count] : counts) {
      if (count > best_count) {
        best = &pair;
        best_count = count;
      }
    }
    if (best == nullptr || best_count < 1) break;
    const SymbolPair chosen = *best;

    for (std::size_t w = 0; w < corpus.symbols.size(); ++w) {
      auto& symbols = corpus.symbols[w];
      if (!detail::contains_pair(symbols, chosen)) continue;
      PairCounts before;
      detail::accumulate_pairs(symbols, corpus.freqs[w], before);
      for (const auto& [pair, count] : before) counts[pair] -= count;
      symbols = detail::merge_pair(symbols, chosen);
      detail::accumulate_pairs(symbols, corpus.freqs[w], counts);
    }
    std::erase_if(counts, [](const auto& entry) { return entry.second <= 0; });
    table.add(chosen.first, chosen.second);
  }
  return table;
}

/// Segments `word` starting from single characters and applying the rules in
/// rank order, each rule merging all of its occurrences left to right.
/// Rules whose pair is absent are no-ops, so the loop jumps straight to the
/// lowest-ranked applicable rule after the last one applied.
inline Segmentation segment_word(std::string_view word, const MergeTable& table) {
  if (word.empty()) throw Error(ErrorKind::invalid_argument, "cannot segment an empty word");
  Segmentation seg{std::string(word), utf8::split_chars(word)};
  std::size_t last_rank = MergeTable::npos;
  while (seg.subwords.size() > 1) {
    std::size_t next = MergeTable::npos;
    for (std::size_t i = 0; i + 1 < seg.subwords.size(); ++i) {
      const std::size_t r = table.next_rank(seg.subwords[i], seg.subwords[i + 1], last_rank);
      if (r < next) next = r;
    }
    if (next == MergeTable::npos) break;
    const MergeRule& rule = table.rules()[next];
    seg.subwords = detail::merge_pair(seg.subwords, SymbolPair{rule.left, rule.right});
    last_rank = next;
  }
  return seg;
}

/// Subword string -> index. Index order: single characters (byte order), then
/// merge products in rank order, then any other segmentation outputs, then one
/// reserved index for units never seen when the table was built.
class SubwordVocab {
 public:
  static constexpr std::string_view kUnknown = "<sub-unk>";

  SubwordVocab() { finalize(); }

  static SubwordVocab build(const WordFreqTable& words, const MergeTable& table) {
    SubwordVocab vocab;
    vocab.units_.clear();
    vocab.index_.clear();
    std::set<std::string> chars;
    for (const auto& [word, count] : words) {
      for (auto& c : utf8::split_chars(word)) chars.insert(std::move(c));
    }
    for (const auto& c : chars) vocab.insert(c);
    for (const auto& rule : table.rules()) vocab.insert(rule.merged());
    for (const auto& [word, count] : words) {
      for (const auto& unit : segment_word(word, table).subwords) vocab.insert(unit);
    }
    vocab.finalize();
    return vocab;
  }

  /// Rebuilds from a list of units in index order (without the reserved unit).
  static SubwordVocab from_units(const std::vector<std::string>& units) {
    SubwordVocab vocab;
    vocab.units_.clear();
    vocab.index_.clear();
    for (const auto& u : units) vocab.insert(u);
    vocab.finalize();
    return vocab;
  }

  std::size_t size() const { return units_.size(); }
  std::size_t unk_index() const { return units_.size() - 1; }
  const std::vector<std::string>& units() const { return units_; }

  std::size_t index_of(const std::string& unit) const {
    auto it = index_.find(unit);
    return it == index_.end() ? unk_index() : it->second;
  }

  bool contains(const std::string& unit) const { return index_.count(unit) != 0; }

 private:
  void insert(const std::string& unit) {
    if (index_.count(unit) != 0) return;
    index_.emplace(unit, units_.size());
    units_.push_back(unit);
  }

  // The reserved unit is appended last and deliberately kept out of index_,
  // so a literal "<sub-unk>" string in the data is not mistaken for it.
  void finalize() { units_.emplace_back(kUnknown); }

  std::vector<std::string> units_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline SubwordVocab build_subword_vocab(const WordFreqTable& words, const MergeTable& table) {
  return SubwordVocab::build(words, table);
}

// ---------------------------------------------------------------------------
// Merge table text format: "#merges: N" header, then line k = "left\tright".

inline void write_merge_table(std::ostream& out, const MergeTable& table) {
  out << "#merges: " << table.num_merges() << '\n';
  for (const auto& rule : table.rules()) out << rule.left << '\t' << rule.right << '\n';
}

inline MergeTable read_merge_table(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("#merges: ", 0) != 0) {
    throw Error(ErrorKind::data, "merge table: missing '#merges: N' header");
  }
  std::size_t expected = 0;
  try {
    expected = std::stoul(line.substr(9));
  } catch (const std::exception&) {
    throw Error(ErrorKind::data, "merge table: bad header '" + line + "'");
  }
  MergeTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw Error(ErrorKind::data, "merge table line " + std::to_string(line_no) + ": expected 'left<TAB>right'");
    }
    table.add(line.substr(0, tab), line.substr(tab + 1));
  }
  if (table.num_merges() != expected) {
    throw Error(ErrorKind::data, "merge table: header says " + std::to_string(expected) + " merges, found " +
                                     std::to_string(table.num_merges()));
  }
  return table;
}

inline void save_merge_table(const std::string& path, const MergeTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot open '" + path + "' for writing");
  write_merge_table(out, table);
}

inline MergeTable load_merge_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "'");
  return read_merge_table(in);
}

/// Reads "word<TAB>count" lines. Lines starting with '#' before the first
/// entry are treated as headers and skipped.
inline WordFreqTable read_word_freqs(std::istream& in) {
  WordFreqTable words;
  std::string line;
  std::size_t line_no = 0;
  bool in_header = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (in_header && line[0] == '#') continue;
    in_header = false;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos || tab == 0) {
      throw Error(ErrorKind::data, "frequency table line " + std::to_string(line_no) + ": expected 'word<TAB>count'");
    }
    std::int64_t count = 0;
    try {
      std::size_t used = 0;
      count = std::stoll(line.substr(tab + 1), &used);
      if (used != line.size() - tab - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error(ErrorKind::data, "frequency table line " + std::to_string(line_no) + ": bad count");
    }
    words[line.substr(0, tab)] += count;
  }
  validate(words);
  return words;
}

inline WordFreqTable load_word_freqs(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "'");
  return read_word_freqs(in);
}

}  // namespace saw::bpe
