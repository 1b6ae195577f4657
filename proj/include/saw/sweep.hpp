#pragma once

#include <iomanip>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "saw/pipeline.hpp"
#include "saw/utf8.hpp"

namespace saw {

enum class SweepAxis { merges, gamma, op };

inline SweepAxis parse_sweep_axis(const std::string& s) {
  if (s == "merges") return SweepAxis::merges;
  if (s == "gamma") return SweepAxis::gamma;
  if (s == "op") return SweepAxis::op;
  throw Error(ErrorKind::invalid_argument, "unknown sweep axis '" + s + "' (expected merges, gamma or op)");
}

struct SweepRow {
  std::string value;
  double valid_acc = 0.0;
  double test_acc = 0.0;
  std::size_t subword_vocab = 0;  // including the reserved unknown unit
  std::size_t char_types = 0;
  std::size_t merges = 0;         // effective merge count
  std::size_t short_list = 0;

  bool operator==(const SweepRow&) const = default;
};

inline ReaderConfig apply_sweep_value(ReaderConfig config, SweepAxis axis, const std::string& value) {
  try {
    switch (axis) {
      case SweepAxis::merges: config.num_merges = std::stoul(value); break;
      case SweepAxis::gamma: config.gamma = std::stod(value); break;
      case SweepAxis::op: config.integration_op = parse_integration_op(value); break;
    }
  } catch (const std::logic_error&) {
    throw Error(ErrorKind::invalid_argument, "bad sweep value '" + value + "'");
  }
  config.validate();
  return config;
}

inline std::size_t count_char_types(const Vocabulary& vocab) {
  std::set<std::string> chars;
  for (const auto& w : vocab.words()) {
    for (auto& c : utf8::split_chars(w)) chars.insert(std::move(c));
  }
  return chars.size();
}

/// One seeded training run per value; every run sees the same splits and
/// seed, so the table is reproducible.
template <class T>
std::vector<SweepRow> sweep(SweepAxis axis, const std::vector<std::string>& values, const ReaderConfig& base,
                            const TrainConfig& train_config, const DatasetSplits& splits) {
  if (values.empty()) throw Error(ErrorKind::invalid_argument, "sweep needs at least one value");
  std::vector<SweepRow> rows;
  for (const auto& value : values) {
    const ReaderConfig config = apply_sweep_value(base, axis, value);
    auto run = fit<T>(config, train_config, splits.train, splits.valid);
    SweepRow row;
    row.value = value;
    row.valid_acc = evaluate(run.model, run.lexicon, splits.valid).accuracy;
    row.test_acc = evaluate(run.model, run.lexicon, splits.test).accuracy;
    row.subword_vocab = run.lexicon.subwords.size();
    row.char_types = count_char_types(run.lexicon.vocab);
    row.merges = run.lexicon.merges.num_merges();
    row.short_list = run.lexicon.short_list.size();
    rows.push_back(row);
  }
  return rows;
}

inline void write_sweep_csv(std::ostream& out, SweepAxis axis, const std::vector<SweepRow>& rows) {
  const char* name = axis == SweepAxis::merges ? "merges" : axis == SweepAxis::gamma ? "gamma" : "op";
  out << name << ",valid_acc,test_acc,subword_vocab,char_types,effective_merges,short_list\n";
  out << std::setprecision(10);
  for (const auto& r : rows) {
    out << r.value << ',' << r.valid_acc << ',' << r.test_acc << ',' << r.subword_vocab << ',' << r.char_types << ','
        << r.merges << ',' << r.short_list << '\n';
  }
}

}  // namespace saw
