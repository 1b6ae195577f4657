// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "saw/saw.hpp"

using namespace saw;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << id << ": " << detail << std::endl;
  if (!ok) ++failures;
}

std::string random_word(std::mt19937_64& rng, std::size_t alphabet, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(1, max_len), ch(0, alphabet - 1);
  std::string w;
  for (std::size_t n = len(rng); n > 0; --n) w += static_cast<char>('a' + ch(rng));
  return w;
}

bpe::WordFreqTable random_corpus(std::mt19937_64& rng, std::size_t max_words, std::size_t alphabet) {
  std::uniform_int_distribution<std::size_t> nwords(1, max_words);
  std::uniform_int_distribution<std::int64_t> freq(1, 9);
  bpe::WordFreqTable words;
  for (std::size_t n = nwords(rng); n > 0; --n) words[random_word(rng, alphabet, 8)] += freq(rng);
  return words;
}

// ---------------------------------------------------------------------------

void criterion_1() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::size_t matched = 0, rules = 0;
  const std::size_t corpora = 200;
  for (std::size_t c = 0; c < corpora; ++c) {
    const std::size_t alphabet = std::uniform_int_distribution<std::size_t>(2, 8)(rng);
    const std::size_t merges = std::uniform_int_distribution<std::size_t>(0, 30)(rng);
    const auto words = random_corpus(rng, 50, alphabet);
    const auto table = bpe::train_bpe(words, merges);
    const auto expect = oracle::bpe(words, merges);
    bool same = table.num_merges() == expect.size();
    for (std::size_t i = 0; same && i < expect.size(); ++i) {
      const auto& r = table.rules()[i];
      same = r.rank == i && r.left == expect[i].first && r.right == expect[i].second;
    }
    rules += expect.size();
    matched += same ? 1 : 0;
  }
  const double secs = seconds_since(t0);
  std::ostringstream d;
  d << matched << "/" << corpora << " corpora match the recount oracle (" << rules << " rules), " << secs << " s";
  report(1, matched == corpora && secs < 30.0, d.str());
}

void criterion_2() {
  std::mt19937_64 rng(202);
  std::size_t words_checked = 0, roundtrip_ok = 0, law_ok = 0, law_checked = 0, distinct_law_ok = 0, distinct_checked = 0;
  while (words_checked < 10000) {
    const std::size_t alphabet = std::uniform_int_distribution<std::size_t>(2, 8)(rng);
    const std::size_t merges = std::uniform_int_distribution<std::size_t>(0, 40)(rng);
    const auto corpus = random_corpus(rng, 50, alphabet);
    const auto table = bpe::train_bpe(corpus, merges);
    for (int i = 0; i < 100; ++i, ++words_checked) {
      const auto w = random_word(rng, alphabet, 12);
      std::string joined;
      for (const auto& s : bpe::segment_word(w, table).subwords) joined += s;
      roundtrip_ok += joined == w ? 1 : 0;
    }
    if (table.num_merges() < merges) continue;
    std::set<std::string> chars, products;
    for (const auto& [w, f] : corpus) {
      for (const auto& c : oracle::chars_of(w)) chars.insert(c);
    }
    for (const auto& r : table.rules()) products.insert(r.left + r.right);
    const auto vocab = bpe::build_subword_vocab(corpus, table);
    ++law_checked;
    law_ok += vocab.size() == chars.size() + products.size() + 1 ? 1 : 0;
    if (products.size() == table.num_merges()) {
      ++distinct_checked;
      distinct_law_ok += vocab.size() == chars.size() + table.num_merges() + 1 ? 1 : 0;
    }
  }
  std::ostringstream d;
  d << roundtrip_ok << "/" << words_checked << " words round-trip; size law (chars + merges + reserved unit) holds on "
    << distinct_law_ok << "/" << distinct_checked << " non-exhausted tables with distinct products, and chars + "
    << "distinct products + 1 on " << law_ok << "/" << law_checked << " non-exhausted tables";
  report(2, roundtrip_ok == words_checked && law_ok == law_checked && distinct_law_ok == distinct_checked &&
                distinct_checked > 0,
         d.str());
}

void criterion_3() {
  const auto t0 = Clock::now();
  const std::vector<std::string> doc{"anna", "met", "the", "annas", "cat", "and", "anna", "left"};
  const std::vector<std::string> query{"<blank>", "met", "the", "cat"};
  const ClozeExample ex{"g", doc, query, "anna"};
  const auto lex = Lexicon::build(std::vector<std::vector<std::string>>{doc, query, {"cats", "meta"}}, 0.7, 15);
  double worst = 0.0;
  std::string worst_case;
  std::size_t checked = 0;
  for (auto op : {IntegrationOp::concat, IntegrationOp::sum, IntegrationOp::mul}) {
    for (std::size_t k : {1u, 2u, 3u}) {
      ReaderConfig c;
      c.integration_op = op;
      c.layers = k;
      c.word_dim = 8;
      c.subword_dim = 8;
      c.hidden = 8;
      c.dropout = 0.0;
      auto model = make_reader<double>(c, lex, 300 + k);
      const auto enc = encode_example(lex, ex);
      auto store = model.params();
      const auto r = grad_check<double>(
          store, [&] { return example_loss(model, enc); },
          [&] { backward(model, forward<double>(model, enc), enc.answer); });
      checked += r.checked;
      if (r.max_rel_error >= worst) {
        worst = r.max_rel_error;
        worst_case = std::string(to_string(op)) + " K=" + std::to_string(k) + " " + r.worst_param;
      }
    }
  }
  const double secs = seconds_since(t0);
  std::ostringstream d;
  d << "max relative error " << worst << " (" << worst_case << ") over " << checked << " coordinates, " << secs
    << " s";
  report(3, worst < 1e-4 && secs < 120.0, d.str());
}

void criterion_4() {
  std::mt19937_64 rng(404);
  std::vector<std::string> pool;
  for (int i = 0; i < 30; ++i) pool.push_back(random_word(rng, 6, 7));
  const auto lex = Lexicon::build(std::vector<std::vector<std::string>>{pool}, 0.8, 20);
  double worst_p = 0.0, worst_cand = 0.0, worst_alpha = 0.0;
  std::size_t rows = 0;
  for (int n = 0; n < 1000; ++n) {
    ReaderConfig c;
    c.integration_op = static_cast<IntegrationOp>(n % 3);
    c.layers = 1 + n % 3;
    c.word_dim = 6;
    c.subword_dim = 5;
    c.hidden = 4;
    c.dropout = 0.0;
    c.init_scale = 0.5;
    const auto model = make_reader<double>(c, lex, 1000 + n);
    std::uniform_int_distribution<std::size_t> len(1, 20), qlen(1, 8), word(0, pool.size() - 1);
    ClozeExample ex;
    ex.id = std::to_string(n);
    for (std::size_t i = len(rng); i > 0; --i) ex.document.push_back(i % 7 == 0 ? random_word(rng, 8, 6) : pool[word(rng)]);
    const std::size_t q = qlen(rng);
    const std::size_t blank = std::uniform_int_distribution<std::size_t>(0, q - 1)(rng);
    for (std::size_t i = 0; i < q; ++i) ex.query.push_back(i == blank ? "<blank>" : pool[word(rng)]);
    ex.answer = ex.document.front();
    const auto tr = forward<double>(model, lex, ex);
    double sp = 0.0, sc = 0.0;
    for (double v : tr.dist.per_position) sp += v;
    for (const auto& cand : tr.dist.candidates) sc += cand.prob;
    worst_p = std::max(worst_p, std::abs(sp - 1.0));
    worst_cand = std::max(worst_cand, std::abs(sc - 1.0));
    for (const auto& layer : tr.layers) {
      const auto& a = layer.gate.alpha;
      for (std::size_t i = 0; i < a.rows(); ++i, ++rows) {
        double s = 0.0;
        for (double v : a.row(i)) s += v;
        worst_alpha = std::max(worst_alpha, std::abs(s - 1.0));
      }
    }
  }
  std::ostringstream d;
  d << "1000 forwards; max |sum-1|: p " << worst_p << ", candidates " << worst_cand << ", attention " << worst_alpha
    << " over " << rows << " rows";
  report(4, worst_p <= 1e-6 && worst_cand <= 1e-6 && worst_alpha <= 1e-6, d.str());
}

// ---------------------------------------------------------------------------

SyntheticSpec smoke_data_spec() {
  SyntheticSpec s;
  s.vocab_size = 100;
  s.entity_pool = 30;
  s.num_train = 200;
  s.num_valid = 100;
  s.num_test = 100;
  s.seed = 11;
  return s;
}

ReaderConfig smoke_reader() {
  ReaderConfig c;
  c.integration_op = IntegrationOp::mul;
  c.layers = 2;
  c.word_dim = 16;
  c.subword_dim = 16;
  c.hidden = 16;
  c.dropout = 0.0;
  c.num_merges = 100;
  c.gamma = 1.0;
  return c;
}

TrainConfig smoke_train() {
  TrainConfig t;
  t.batch_size = 8;
  t.base_lr = 0.005;
  t.lr_decay_after = 0;
  t.epochs = 50;
  t.seed = 5;
  return t;
}

struct SmokeRun {
  TrainHistory history;
  EvalReport train_report, test_report;
  double seconds = 0.0;
};

SmokeRun smoke_run(const DatasetSplits& data) {
  const auto t0 = Clock::now();
  auto run = fit<double>(smoke_reader(), smoke_train(), data.train, data.valid);
  SmokeRun out;
  out.history = run.history;
  out.train_report = evaluate(run.model, run.lexicon, data.train);
  out.test_report = evaluate(run.model, run.lexicon, data.test);
  out.seconds = seconds_since(t0);
  return out;
}

void criterion_5_and_9(const DatasetSplits& data) {
  const auto a = smoke_run(data);
  std::size_t first = 0;
  for (const auto& r : a.history) {
    if (first == 0 && r.train_acc >= 0.95) first = r.epoch;
  }
  const double ratio = a.test_report.random_baseline > 0 ? a.test_report.accuracy / a.test_report.random_baseline : 0;
  std::ostringstream d;
  d << "train accuracy " << a.train_report.accuracy << " after " << a.history.size() << " epochs (epoch accuracy first >= 0.95 at "
    << first << "); test accuracy " << a.test_report.accuracy << " vs random " << a.test_report.random_baseline
    << " (" << ratio << "x); " << a.seconds << " s";
  report(5, a.train_report.accuracy >= 0.95 && first > 0 && ratio >= 5.0 && a.seconds < 300.0, d.str());

  const auto b = smoke_run(data);
  const bool same = a.history == b.history && a.train_report == b.train_report && a.test_report == b.test_report;
  report(9, same, same ? "second seeded run is bit-identical (history, train and test reports)"
                       : "second seeded run differs");
}

void criterion_6() {
  auto spec = smoke_data_spec();
  spec.oov_rate = 0.2;
  const auto data = generate_synthetic(spec);
  auto rc = smoke_reader();
  rc.gamma = 0.5;
  const auto lex = build_lexicon(data.train, rc);

  std::size_t oov_answers = 0, mapped = 0;
  for (const auto* split : {&data.valid, &data.test}) {
    for (const auto& ex : *split) {
      if (!lex.is_oov(ex.answer)) continue;
      ++oov_answers;
      std::vector<oracle::Pair> rules;
      for (const auto& r : lex.merges.rules()) rules.emplace_back(r.left, r.right);
      std::vector<std::size_t> expect;
      for (const auto& unit : oracle::segment(ex.answer, rules)) expect.push_back(lex.subwords.index_of(unit));
      const auto enc = encode_example(lex, ex);
      bool ok = true;
      for (std::size_t i = 0; i < enc.doc_words.size(); ++i) {
        if (enc.doc_words[i] != ex.answer) continue;
        ok = ok && enc.doc[i].word_index == lex.short_list.unk_index() && enc.doc[i].subword_indices == expect;
      }
      mapped += ok ? 1 : 0;
    }
  }

  auto run = fit<double>(rc, smoke_train(), data.train, data.valid);
  const auto rep = evaluate(run.model, run.lexicon, data.test);
  std::ostringstream d;
  d << mapped << "/" << oov_answers << " OOV answers map to UNK with spelling-derived subwords; test accuracy "
    << rep.accuracy << "; OOV-answer subset " << rep.oov_correct << "/" << rep.oov_total << " = " << rep.oov_accuracy
    << " vs random " << rep.oov_random_baseline;
  report(6, oov_answers > 0 && mapped == oov_answers && rep.oov_total > 0 && rep.oov_accuracy > rep.oov_random_baseline,
         d.str());
}

void criterion_7() {
  bool ok = true;
  std::ostringstream d;
  const double expect[] = {0.001, 0.001, 0.0005, 0.00025, 0.000125};
  d << "lr";
  for (std::size_t e = 1; e <= 5; ++e) {
    const double lr = lr_schedule(e, 0.001);
    d << ' ' << lr;
    ok = ok && std::abs(lr - expect[e - 1]) < 1e-15;
  }

  double worst = 0.0;
  std::mt19937_64 rng(707);
  std::uniform_real_distribution<double> u(-8.0, 8.0);
  for (int trial = 0; trial < 200; ++trial) {
    Param<double> a({4, 3}), b({5});
    for (auto& v : a.grad.values()) v = u(rng) * (trial % 2 ? 0.1 : 1.0);
    for (auto& v : b.grad.values()) v = u(rng) * (trial % 2 ? 0.1 : 1.0);
    ParamStore<double> store;
    store.add("a", a);
    store.add("b", b);
    const double before = store.grad_norm();
    clip_gradients(store, 10.0);
    worst = std::max(worst, std::abs(store.grad_norm() - std::min(before, 10.0)));
  }
  ok = ok && worst <= 1e-9;
  d << "; clip error " << worst;

  const ReaderConfig rc;
  const TrainConfig tc;
  const bool defaults = tc.batch_size == 64 && rc.layers == 3 && rc.hidden == 128 && rc.dropout == 0.5 &&
                        rc.num_merges == 1000 && rc.gamma == 0.9 && tc.base_lr == 0.001 && tc.clip_threshold == 10.0;
  d << "; defaults " << (defaults ? "match" : "differ");
  report(7, ok && defaults, d.str());
}

void criterion_8(const DatasetSplits& data) {
  std::ostringstream csv;
  std::size_t lines = 0;
  bool ok = true;
  std::string err;
  try {
    const auto rows = sweep<double>(SweepAxis::op, {"concat", "sum", "mul"}, smoke_reader(), smoke_train(), data);
    write_sweep_csv(csv, SweepAxis::op, rows);
    std::istringstream in(csv.str());
    std::string line;
    std::set<std::string> ops;
    while (std::getline(in, line)) {
      if (lines++ > 0) ops.insert(line.substr(0, line.find(',')));
    }
    ok = ops == std::set<std::string>{"concat", "sum", "mul"} && lines == 4;
  } catch (const std::exception& e) {
    ok = false;
    err = e.what();
  }
  std::string flat = csv.str();
  for (auto& ch : flat) {
    if (ch == '\n') ch = ' ';
  }
  report(8, ok, ok ? "sweep CSV: " + flat : "sweep failed: " + err + " " + flat);
}

}  // namespace

int main() {
  const auto smoke = generate_synthetic(smoke_data_spec());
  const std::vector<std::function<void()>> steps{
      criterion_1, criterion_2, criterion_3, criterion_4, [&] { criterion_5_and_9(smoke); }, criterion_6,
      criterion_7, [&] { criterion_8(smoke); }};
  for (const auto& step : steps) {
    try {
      step();
    } catch (const std::exception& e) {
      std::cout << "FAIL criterion step threw: " << e.what() << std::endl;
      ++failures;
    }
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
