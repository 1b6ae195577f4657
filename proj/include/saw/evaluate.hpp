#pragma once

#include <random>
#include <string>
#include <vector>

#include "saw/example.hpp"
#include "saw/reader.hpp"

namespace saw {

struct EvalReport {
  std::size_t total = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
  std::vector<bool> per_example;
  std::vector<std::string> predictions;
  // Examples whose answer is outside the short list (UNK at the word level).
  std::size_t oov_total = 0;
  std::size_t oov_correct = 0;
  double oov_accuracy = 0.0;
  // Expected accuracy of guessing uniformly among distinct document words.
  double random_baseline = 0.0;
  double oov_random_baseline = 0.0;

  std::size_t in_vocab_total() const { return total - oov_total; }
  bool operator==(const EvalReport&) const = default;
};

/// Exact-match accuracy of eval-mode predictions.
template <class T>
EvalReport evaluate(const ReaderModel<T>& model, const Lexicon& lexicon, const std::vector<ClozeExample>& examples) {
  EvalReport report;
  double baseline = 0.0, oov_baseline = 0.0;
  for (const auto& ex : examples) {
    std::string predicted;
    try {
      predicted = answer(forward<T>(model, lexicon, ex, Mode::eval).dist);
    } catch (const Error& err) {
      throw Error(err.kind(), "example '" + ex.id + "': " + err.what());
    }
    const bool ok = predicted == ex.answer;
    const bool oov = lexicon.is_oov(ex.answer);
    const double guess = 1.0 / static_cast<double>(distinct_candidates(ex));
    report.per_example.push_back(ok);
    report.predictions.push_back(std::move(predicted));
    ++report.total;
    report.correct += ok ? 1 : 0;
    baseline += guess;
    if (oov) {
      ++report.oov_total;
      report.oov_correct += ok ? 1 : 0;
      oov_baseline += guess;
    }
  }
  if (report.total > 0) {
    report.accuracy = static_cast<double>(report.correct) / static_cast<double>(report.total);
    report.random_baseline = baseline / static_cast<double>(report.total);
  }
  if (report.oov_total > 0) {
    report.oov_accuracy = static_cast<double>(report.oov_correct) / static_cast<double>(report.oov_total);
    report.oov_random_baseline = oov_baseline / static_cast<double>(report.oov_total);
  }
  return report;
}

/// Expected accuracy of a uniform guess over each document's distinct words.
inline double random_guess_accuracy(const std::vector<ClozeExample>& examples) {
  if (examples.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& ex : examples) sum += 1.0 / static_cast<double>(distinct_candidates(ex));
  return sum / static_cast<double>(examples.size());
}

/// The random-guess baseline model: picks one distinct document word
/// uniformly at random.
class RandomGuesser {
 public:
  explicit RandomGuesser(std::uint64_t seed) : rng_(seed) {}

  std::string guess(const ClozeExample& ex) {
    std::vector<std::string> words;
    for (const auto& w : ex.document) {
      if (std::find(words.begin(), words.end(), w) == words.end()) words.push_back(w);
    }
    return words[std::uniform_int_distribution<std::size_t>(0, words.size() - 1)(rng_)];
  }

  double accuracy(const std::vector<ClozeExample>& examples) {
    if (examples.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& ex : examples) hits += guess(ex) == ex.answer ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(examples.size());
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace saw
