#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "saw/bpe.hpp"

using namespace saw;
using namespace saw::bpe;

namespace {

std::vector<oracle::Pair> pairs_of(const MergeTable& t) {
  std::vector<oracle::Pair> out;
  for (const auto& r : t.rules()) out.emplace_back(r.left, r.right);
  return out;
}

WordFreqTable random_corpus(std::mt19937_64& rng, std::size_t max_words, std::size_t max_alphabet) {
  std::uniform_int_distribution<std::size_t> n_words(1, max_words), alpha(1, max_alphabet), len(1, 8);
  std::uniform_int_distribution<int> freq(1, 5);
  const std::size_t a = alpha(rng);
  std::uniform_int_distribution<std::size_t> letter(0, a - 1);
  WordFreqTable words;
  const std::size_t n = n_words(rng);
  for (std::size_t i = 0; i < n; ++i) {
    std::string w;
    const std::size_t l = len(rng);
    for (std::size_t j = 0; j < l; ++j) w += static_cast<char>('a' + letter(rng));
    words[w] += freq(rng);
  }
  return words;
}

std::int64_t corpus_tokens(const WordFreqTable& words, const MergeTable& t) {
  std::int64_t n = 0;
  for (const auto& [w, f] : words) n += f * static_cast<std::int64_t>(segment_word(w, t).subwords.size());
  return n;
}

}  // namespace

TEST(CountBigrams, SinglePair) {
  const auto c = count_bigrams(WordFreqTable{{"ab", 1}});
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c.at({"a", "b"}), 1);
}

TEST(CountBigrams, WeightedByFrequency) {
  const auto c = count_bigrams(WordFreqTable{{"abab", 2}, {"ab", 1}});
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.at({"a", "b"}), 5);
  EXPECT_EQ(c.at({"b", "a"}), 2);
}

TEST(CountBigrams, EmptyCorpus) { EXPECT_TRUE(count_bigrams(WordFreqTable{}).empty()); }

TEST(CountBigrams, OverlappingRunsDoNotReusePositions) {
  EXPECT_EQ(count_bigrams(WordFreqTable{{"aaa", 1}}).at({"a", "a"}), 1);
  EXPECT_EQ(count_bigrams(WordFreqTable{{"aaaa", 3}}).at({"a", "a"}), 6);
}

TEST(CountBigrams, MatchesOracleOnRandomCorpora) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto words = random_corpus(rng, 20, 4);
    for (const auto& [pair, count] : count_bigrams(words)) {
      std::int64_t expected = 0;
      for (const auto& [w, f] : words) expected += oracle::count_pair(oracle::chars_of(w), pair.first, pair.second) * f;
      EXPECT_EQ(count, expected);
    }
  }
}

TEST(TrainBpe, SinglePairCorpus) {
  const auto t = train_bpe({{"aa", 1}}, 1);
  ASSERT_EQ(t.num_merges(), 1u);
  EXPECT_EQ(t.rules()[0].left, "a");
  EXPECT_EQ(t.rules()[0].right, "a");
  EXPECT_EQ(t.rules()[0].rank, 0u);
}

TEST(TrainBpe, ZeroMerges) { EXPECT_EQ(train_bpe({{"abc", 3}, {"cab", 1}}, 0).num_merges(), 0u); }

TEST(TrainBpe, HighestCountWins) {
  const auto t = train_bpe({{"abab", 2}, {"ab", 1}}, 1);
  ASSERT_EQ(t.num_merges(), 1u);
  EXPECT_EQ(t.rules()[0].merged(), "ab");
}

TEST(TrainBpe, TiesBrokenLexicographically) {
  const auto t = train_bpe({{"ab", 1}, {"ba", 1}}, 1);
  ASSERT_EQ(t.num_merges(), 1u);
  EXPECT_EQ(t.rules()[0].left, "a");
  EXPECT_EQ(t.rules()[0].right, "b");
}

TEST(TrainBpe, StopsWhenExhausted) {
  const auto t = train_bpe({{"abc", 1}}, 10);
  EXPECT_EQ(t.num_merges(), 2u);
  EXPECT_EQ(segment_word("abc", t).subwords, std::vector<std::string>{"abc"});
}

TEST(TrainBpe, RanksAreContiguous) {
  const auto t = train_bpe({{"lower", 5}, {"lowest", 2}, {"newer", 6}, {"wider", 3}}, 12);
  for (std::size_t i = 0; i < t.num_merges(); ++i) EXPECT_EQ(t.rules()[i].rank, i);
}

TEST(TrainBpe, MatchesOracleOnRandomCorpora) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const auto words = random_corpus(rng, 30, 6);
    EXPECT_EQ(pairs_of(train_bpe(words, 25)), oracle::bpe(words, 25)) << "trial " << trial;
  }
}

TEST(TrainBpe, Deterministic) {
  const WordFreqTable words{{"banana", 3}, {"bandana", 2}, {"ananas", 4}};
  EXPECT_EQ(pairs_of(train_bpe(words, 8)), pairs_of(train_bpe(words, 8)));
}

TEST(TrainBpe, UnicodeCharactersAreUnits) {
  const WordFreqTable words{{"读书", 3}, {"读者", 2}};
  const auto t = train_bpe(words, 1);
  ASSERT_EQ(t.num_merges(), 1u);
  EXPECT_EQ(t.rules()[0].left, "读");
  EXPECT_EQ(segment_word("读者", MergeTable{}).subwords, (std::vector<std::string>{"读", "者"}));
}

TEST(TrainBpe, RejectsInvalidWords) {
  EXPECT_THROW(train_bpe({{"a b", 1}}, 1), Error);
  EXPECT_THROW(train_bpe({{"", 1}}, 1), Error);
  EXPECT_THROW(train_bpe({{"ab", 0}}, 1), Error);
}

TEST(SegmentWord, EmptyTableGivesCharacters) {
  EXPECT_EQ(segment_word("cat", MergeTable{}).subwords, (std::vector<std::string>{"c", "a", "t"}));
}

TEST(SegmentWord, SingleRuleAppliedEverywhere) {
  MergeTable t;
  t.add("a", "b");
  EXPECT_EQ(segment_word("abab", t).subwords, (std::vector<std::string>{"ab", "ab"}));
}

TEST(SegmentWord, IllustrativeSplit) {
  MergeTable t;
  for (auto [l, r] : std::vector<std::pair<const char*, const char*>>{
           {"i", "n"}, {"d", "i"}, {"di", "s"}, {"dis", "p"}, {"e", "n"}, {"en", "s"}, {"a", "b"}, {"ab", "l"},
           {"abl", "e"}}) {
    t.add(l, r);
  }
  EXPECT_EQ(segment_word("indispensable", t).subwords, (std::vector<std::string>{"in", "disp", "ens", "able"}));
}

TEST(SegmentWord, RankOrderNotGreedyLength) {
  MergeTable t;
  t.add("b", "c");
  t.add("a", "b");
  EXPECT_EQ(segment_word("abc", t).subwords, (std::vector<std::string>{"a", "bc"}));
}

TEST(SegmentWord, RepeatedPairAtLaterRank) {
  // "aaaa" -> aa aa -> aaaa; then (a, a) can fire again on new input.
  MergeTable t;
  t.add("a", "a");
  t.add("aa", "aa");
  t.add("a", "a");
  EXPECT_EQ(t.num_merges(), 3u);
  EXPECT_EQ(segment_word("aaaaa", t).subwords, oracle::segment("aaaaa", pairs_of(t)));
}

TEST(SegmentWord, RoundTripAndOracleOnRandomTables) {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<std::size_t> len(1, 14);
  for (int trial = 0; trial < 30; ++trial) {
    const auto corpus = random_corpus(rng, 40, 5);
    const auto t = train_bpe(corpus, 40);
    for (int k = 0; k < 50; ++k) {
      std::string w;
      const std::size_t l = len(rng);
      for (std::size_t j = 0; j < l; ++j) w += static_cast<char>('a' + rng() % 6);
      const auto seg = segment_word(w, t);
      std::string joined;
      for (const auto& s : seg.subwords) joined += s;
      EXPECT_EQ(joined, w);
      EXPECT_EQ(seg.subwords, oracle::segment(w, pairs_of(t)));
    }
  }
}

TEST(SegmentWord, GranularityStrictlyDecreases) {
  const WordFreqTable words{{"lower", 5}, {"lowest", 2}, {"newer", 6}, {"wider", 3}, {"new", 2}};
  const auto full = train_bpe(words, 100);
  std::int64_t prev = corpus_tokens(words, MergeTable{});
  for (std::size_t k = 1; k <= full.num_merges(); ++k) {
    const auto cur = corpus_tokens(words, train_bpe(words, k));
    EXPECT_LT(cur, prev) << "after " << k << " merges";
    prev = cur;
  }
}

TEST(SubwordVocab, SingleMerge) {
  const WordFreqTable words{{"aa", 1}};
  const auto v = build_subword_vocab(words, train_bpe(words, 1));
  EXPECT_EQ(v.size(), 3u);
  EXPECT_TRUE(v.contains("a"));
  EXPECT_TRUE(v.contains("aa"));
  EXPECT_EQ(v.units().back(), SubwordVocab::kUnknown);
}

TEST(SubwordVocab, CharactersOnly) {
  const WordFreqTable words{{"abc", 1}, {"cab", 2}, {"dd", 1}};
  EXPECT_EQ(build_subword_vocab(words, MergeTable{}).size(), 5u);
}

TEST(SubwordVocab, TwoMerges) {
  const WordFreqTable words{{"ab", 1}, {"ba", 1}};
  const auto t = train_bpe(words, 2);
  ASSERT_EQ(t.num_merges(), 2u);
  const auto v = build_subword_vocab(words, t);
  EXPECT_TRUE(v.contains("a"));
  EXPECT_TRUE(v.contains("b"));
  EXPECT_TRUE(v.contains("ab"));
  EXPECT_TRUE(v.contains("ba"));
  EXPECT_EQ(v.size(), 5u);
}

TEST(SubwordVocab, SizeLaw) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const auto words = random_corpus(rng, 30, 6);
    const auto t = train_bpe(words, 15);
    std::set<std::string> chars, products;
    for (const auto& [w, f] : words) {
      for (const auto& c : oracle::chars_of(w)) chars.insert(c);
    }
    for (const auto& r : t.rules()) products.insert(r.merged());
    const auto v = build_subword_vocab(words, t);
    EXPECT_EQ(v.size(), chars.size() + products.size() + 1);
    if (products.size() == t.num_merges()) {
      EXPECT_EQ(v.size(), chars.size() + t.num_merges() + 1);
    }
  }
}

TEST(SubwordVocab, UnseenUnitsMapToReservedIndex) {
  const WordFreqTable words{{"ab", 1}};
  const auto v = build_subword_vocab(words, MergeTable{});
  EXPECT_EQ(v.index_of("z"), v.unk_index());
  EXPECT_EQ(v.index_of(std::string(SubwordVocab::kUnknown)), v.unk_index());
  EXPECT_NE(v.index_of("a"), v.unk_index());
}

TEST(MergeTableIo, RoundTrip) {
  const auto t = train_bpe({{"banana", 3}, {"bandana", 2}, {"读书", 2}}, 6);
  std::stringstream ss;
  write_merge_table(ss, t);
  EXPECT_EQ(ss.str().rfind("#merges: 6\n", 0), 0u);
  const auto back = read_merge_table(ss);
  EXPECT_EQ(pairs_of(back), pairs_of(t));
}

TEST(MergeTableIo, RejectsBadInput) {
  std::stringstream missing_header("a\tb\n");
  EXPECT_THROW(read_merge_table(missing_header), Error);
  std::stringstream wrong_count("#merges: 2\na\tb\n");
  EXPECT_THROW(read_merge_table(wrong_count), Error);
  std::stringstream no_tab("#merges: 1\nab\n");
  EXPECT_THROW(read_merge_table(no_tab), Error);
}

TEST(WordFreqIo, ParsesTsv) {
  std::stringstream ss("#word\tcount\nlow\t5\nnewer\t6\n");
  const auto w = read_word_freqs(ss);
  EXPECT_EQ(w.size(), 2u);
  EXPECT_EQ(w.at("newer"), 6);
}
