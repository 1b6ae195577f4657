#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "saw/vocabulary.hpp"

using namespace saw;

namespace {

using Seqs = std::vector<std::vector<std::string>>;

Vocabulary vocab_of_size(std::size_t s) {
  std::vector<std::pair<std::string, std::int64_t>> entries;
  for (std::size_t i = 0; i < s; ++i) entries.emplace_back("w" + std::to_string(i), static_cast<std::int64_t>(s - i));
  return Vocabulary::from_entries(entries);
}

}  // namespace

TEST(BuildVocab, FrequencyOrder) {
  const auto v = build_vocab(Seqs{{"a", "b", "a"}});
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v.word(0), "a");
  EXPECT_EQ(v.count(0), 2);
  EXPECT_EQ(v.word(1), "b");
}

TEST(BuildVocab, TiesByFirstOccurrence) {
  const auto v = build_vocab(Seqs{{"x", "y"}});
  EXPECT_EQ(v.words(), (std::vector<std::string>{"x", "y"}));
  const auto w = build_vocab(Seqs{{"q", "p"}, {"p", "q", "r", "r"}});
  EXPECT_EQ(w.words(), (std::vector<std::string>{"q", "p", "r"}));
}

TEST(BuildVocab, EmptyCorpus) {
  try {
    build_vocab(Seqs{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "empty corpus");
  }
}

TEST(BuildVocab, MillionTokensMatchHashCount) {
  std::mt19937_64 rng(3);
  std::geometric_distribution<int> draw(0.01);
  Seqs seqs(1000);
  std::vector<std::string> flat;
  for (auto& s : seqs) {
    for (int i = 0; i < 1000; ++i) {
      s.push_back("t" + std::to_string(draw(rng)));
      flat.push_back(s.back());
    }
  }
  const auto v = build_vocab(seqs);
  const auto counts = oracle::hash_count(flat);
  ASSERT_EQ(v.size(), counts.size());
  for (const auto& [w, c] : counts) EXPECT_EQ(v.frequency(w), c);
  for (std::size_t i = 1; i < v.size(); ++i) EXPECT_GE(v.count(i - 1), v.count(i));
}

TEST(ShortList, NinetyPercentOfTen) {
  const auto v = vocab_of_size(10);
  const ShortList sl(v, 0.9);
  EXPECT_EQ(sl.size(), 9u);
  EXPECT_FALSE(sl.contains("w9"));
  EXPECT_TRUE(sl.contains("w8"));
}

TEST(ShortList, Rounding) {
  EXPECT_EQ(ShortList(vocab_of_size(5), 1.0).size(), 5u);
  EXPECT_EQ(ShortList(vocab_of_size(7), 0.5).size(), 3u);
  EXPECT_EQ(ShortList(vocab_of_size(10), 0.3).size(), 3u);
  EXPECT_EQ(ShortList(vocab_of_size(3), 0.1).size(), 1u);
}

TEST(ShortList, SizeLawAcrossGrid) {
  for (std::size_t s = 1; s <= 40; ++s) {
    const auto v = vocab_of_size(s);
    for (int g = 1; g <= 20; ++g) {
      const double gamma = g / 20.0;
      std::size_t expected = 0;
      while ((expected + 1) * 20 <= static_cast<std::size_t>(g) * s) ++expected;
      EXPECT_EQ(ShortList(v, gamma).size(), std::max<std::size_t>(1, expected)) << "s=" << s << " g=" << gamma;
    }
  }
}

TEST(ShortList, FilterMonotonicity) {
  const auto v = vocab_of_size(23);
  for (int a = 1; a <= 10; ++a) {
    for (int b = a; b <= 10; ++b) {
      const ShortList lo(v, a / 10.0), hi(v, b / 10.0);
      for (const auto& w : v.words()) {
        EXPECT_TRUE(!lo.contains(w) || hi.contains(w));
      }
    }
  }
}

TEST(ShortList, InvalidRatio) {
  const auto v = vocab_of_size(4);
  for (double g : {0.0, -0.5, 1.5}) {
    try {
      ShortList sl(v, g);
      FAIL();
    } catch (const Error& e) {
      EXPECT_STREQ(e.what(), "invalid filter ratio");
    }
  }
}

TEST(IndexWord, RanksAndUnk) {
  const auto v = vocab_of_size(10);
  const ShortList sl(v, 0.9);
  EXPECT_EQ(index_word("w0", sl), 0u);
  EXPECT_EQ(index_word("w9", sl), sl.unk_index());
  EXPECT_EQ(index_word("zyzzx", sl), sl.unk_index());
  EXPECT_EQ(index_word("", sl), sl.unk_index());
  EXPECT_EQ(sl.table_rows(), 10u);
}

TEST(Lexicon, SubwordsComeFromOriginalSpelling) {
  const Seqs seqs{{"lower", "lower", "lowest", "newer", "wider", "newer", "low"}};
  const auto lex = Lexicon::build(seqs, 0.5, 10);
  for (const auto& w : lex.vocab.words()) {
    const auto idx = lex.index(w);
    EXPECT_EQ(idx.subword_indices, index_subwords(w, lex.merges, lex.subwords));
    for (auto s : idx.subword_indices) EXPECT_NE(s, lex.subwords.unk_index());
  }
  EXPECT_TRUE(lex.is_oov("wider"));
  EXPECT_EQ(lex.index("wider").word_index, lex.short_list.unk_index());
}

TEST(Lexicon, UnkDecoupling) {
  const Seqs seqs{{"lower", "lower", "lowest", "newer", "wider", "newer", "low"}};
  const auto narrow = Lexicon::build(seqs, 0.2, 10);
  const auto wide = Lexicon::build(seqs, 1.0, 10);
  for (const auto& w : wide.vocab.words()) {
    EXPECT_EQ(narrow.index(w).subword_indices, wide.index(w).subword_indices);
    if (narrow.is_oov(w)) {
      EXPECT_EQ(narrow.index(w).word_index, narrow.short_list.unk_index());
    }
  }
}

TEST(Lexicon, UnseenWordFallsBackToCharacters) {
  const auto lex = Lexicon::build(Seqs{{"abc", "bca", "cab"}}, 1.0, 3);
  for (auto s : lex.index("cccaaabbb").subword_indices) EXPECT_NE(s, lex.subwords.unk_index());
  const auto idx = lex.index("abz");
  EXPECT_EQ(idx.subword_indices.back(), lex.subwords.unk_index());
  EXPECT_EQ(idx.word_index, lex.short_list.unk_index());
}

TEST(VocabularyIo, ShortListRoundTrip) {
  const auto v = build_vocab(Seqs{{"a", "b", "a", "c", "读", "读", "读"}});
  const ShortList sl(v, 0.5);
  std::stringstream ss;
  write_short_list(ss, v, sl);
  const auto [v2, sl2] = read_short_list(ss);
  EXPECT_EQ(v2.words(), v.words());
  EXPECT_EQ(sl2.size(), sl.size());
  EXPECT_EQ(sl2.gamma(), sl.gamma());
}

TEST(VocabularyIo, RejectsUnsortedEntries) {
  std::stringstream ss("a\t1\nb\t5\n");
  EXPECT_THROW(read_vocabulary(ss), Error);
}
