// saw: command-line front end for the subword-augmented cloze reader.
//
// Every verb writes CSV or tab-separated text to stdout (or --out). On
// failure a single line "error: <kind>: <message>" goes to stderr and the
// exit code is nonzero: 1 for library errors, 2 for usage errors, 3 for
// anything else.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "saw/saw.hpp"

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw saw::Error(saw::ErrorKind::io, "cannot open '" + path + "' for writing");
  return out;
}

/// Writes through `fn` to `path`, or to stdout when `path` is empty.
template <class F>
void emit(const std::string& path, F&& fn) {
  if (path.empty()) {
    fn(std::cout);
  } else {
    auto out = open_out(path);
    fn(out);
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = saw::trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

saw::DatasetSplits load_splits(const std::string& dir, bool need_test) {
  const fs::path root(dir);
  saw::DatasetSplits s;
  s.train = saw::load_dataset((root / "train.jsonl").string());
  s.valid = saw::load_dataset((root / "valid.jsonl").string());
  if (need_test) s.test = saw::load_dataset((root / "test.jsonl").string());
  return s;
}

saw::RunConfig load_config(const std::string& path) {
  saw::RunConfig rc = path.empty() ? saw::RunConfig{} : saw::load_run_config(path);
  saw::apply_seed_override(rc.train);
  return rc;
}

struct Args {
  std::string input, out, table, config, data, model, axis, values, id;
  std::vector<std::string> words;
  std::size_t merges = 1000;
  std::size_t layer = 1;
  double gamma = 0.9;
  saw::SyntheticSpec spec;
};

void cmd_bpe_train(const Args& a) {
  const auto words = saw::bpe::load_word_freqs(a.input);
  const auto table = saw::bpe::train_bpe(words, a.merges);
  saw::bpe::save_merge_table(a.out, table);
  const auto subwords = saw::bpe::build_subword_vocab(words, table);
  std::cout << "requested_merges\t" << a.merges << "\neffective_merges\t" << table.num_merges()
            << "\nsubword_vocab\t" << subwords.size() << '\n';
}

void cmd_segment(const Args& a) {
  const auto table = saw::bpe::load_merge_table(a.table);
  std::vector<std::string> words = a.words;
  if (!a.input.empty()) {
    std::ifstream in(a.input);
    if (!in) throw saw::Error(saw::ErrorKind::io, "cannot open '" + a.input + "'");
    std::string w;
    while (in >> w) words.push_back(w);
  }
  if (words.empty()) throw saw::Error(saw::ErrorKind::invalid_argument, "no words to segment (use --word or --input)");
  for (const auto& w : words) {
    std::cout << w << '\t' << saw::join_tokens(saw::bpe::segment_word(w, table).subwords) << '\n';
  }
}

void cmd_vocab(const Args& a) {
  const auto data = saw::load_dataset(a.input, false);
  const auto vocab = saw::build_vocab(saw::token_sequences(data));
  const saw::ShortList sl(vocab, a.gamma);
  fs::create_directories(a.out);
  {
    auto out = open_out((fs::path(a.out) / "vocab.tsv").string());
    saw::write_vocabulary(out, vocab);
  }
  auto out = open_out((fs::path(a.out) / "shortlist.tsv").string());
  saw::write_short_list(out, vocab, sl);
  std::cout << "vocab_size\t" << vocab.size() << "\nshort_list\t" << sl.size() << "\nunk_index\t" << sl.unk_index()
            << '\n';
}

void cmd_gen_data(const Args& a) {
  const auto splits = saw::generate_synthetic(a.spec);
  fs::create_directories(a.out);
  const fs::path root(a.out);
  saw::save_dataset((root / "train.jsonl").string(), splits.train);
  saw::save_dataset((root / "valid.jsonl").string(), splits.valid);
  saw::save_dataset((root / "test.jsonl").string(), splits.test);
  std::cout << "split,examples\ntrain," << splits.train.size() << "\nvalid," << splits.valid.size() << "\ntest,"
            << splits.test.size() << '\n';
}

void cmd_train(const Args& a) {
  const auto rc = load_config(a.config);
  const auto splits = load_splits(a.data, false);
  const auto run = saw::fit<float>(rc.reader, rc.train, splits.train, splits.valid, [](const saw::EpochRecord& r) {
    std::cerr << "epoch " << r.epoch << " lr " << r.lr << " loss " << r.train_loss << " train_acc " << r.train_acc
              << " valid_acc " << r.valid_acc << '\n';
    return true;
  });
  auto model = run.model;
  saw::save_reader(a.out, model, run.lexicon);
  {
    auto out = open_out((fs::path(a.out) / "history.csv").string());
    saw::write_history_csv(out, run.history);
  }
  saw::write_history_csv(std::cout, run.history);
}

void cmd_eval(const Args& a) {
  const auto loaded = saw::load_reader<float>(a.model);
  const auto data = saw::load_dataset(a.input);
  const auto r = saw::evaluate(loaded.model, loaded.lexicon, data);
  emit(a.out, [&](std::ostream& out) {
    out << std::setprecision(10) << "metric,value\n"
        << "total," << r.total << "\ncorrect," << r.correct << "\naccuracy," << r.accuracy << "\noov_total,"
        << r.oov_total << "\noov_correct," << r.oov_correct << "\noov_accuracy," << r.oov_accuracy
        << "\nrandom_baseline," << r.random_baseline << "\noov_random_baseline," << r.oov_random_baseline << '\n';
  });
}

void cmd_predict(const Args& a) {
  const auto loaded = saw::load_reader<float>(a.model);
  const auto data = saw::load_dataset(a.input, false);
  emit(a.out, [&](std::ostream& out) {
    out << std::setprecision(6) << "id\tanswer\ttop5\n";
    for (const auto& ex : data) {
      const auto dist = saw::forward<float>(loaded.model, loaded.lexicon, ex).dist;
      out << ex.id << '\t' << saw::answer(dist) << '\t';
      const auto ranked = dist.ranked();
      for (std::size_t i = 0; i < ranked.size() && i < 5; ++i) {
        out << (i ? " " : "") << ranked[i].word << ':' << ranked[i].prob;
      }
      out << '\n';
    }
  });
}

void cmd_sweep(const Args& a) {
  const auto rc = load_config(a.config);
  const auto axis = saw::parse_sweep_axis(a.axis);
  const auto values = split_list(a.values);
  const auto rows = saw::sweep<float>(axis, values, rc.reader, rc.train, load_splits(a.data, true));
  emit(a.out, [&](std::ostream& out) { saw::write_sweep_csv(out, axis, rows); });
}

void cmd_attn_dump(const Args& a) {
  const auto loaded = saw::load_reader<float>(a.model);
  const auto data = saw::load_dataset(a.input, false);
  const saw::ClozeExample* ex = nullptr;
  for (const auto& e : data) {
    if (e.id == a.id || (a.id.empty() && ex == nullptr)) ex = &e;
  }
  if (ex == nullptr) throw saw::Error(saw::ErrorKind::invalid_argument, "no example with id '" + a.id + "'");
  const auto dump = saw::dump_attention(loaded.model, loaded.lexicon, *ex, a.layer);
  emit(a.out, [&](std::ostream& out) { saw::write_attention(out, dump); });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subword-augmented cloze reader"};
  app.require_subcommand(1);
  Args a;

  auto* bpe_train = app.add_subcommand("bpe-train", "learn BPE merges from a word<TAB>count file");
  bpe_train->add_option("--input", a.input, "word frequency TSV")->required();
  bpe_train->add_option("--merges", a.merges, "number of merges")->required();
  bpe_train->add_option("--out", a.out, "merge table output path")->required();

  auto* segment = app.add_subcommand("segment", "segment words with a merge table");
  segment->add_option("--table", a.table, "merge table")->required();
  segment->add_option("--word", a.words, "word to segment (repeatable)");
  segment->add_option("--input", a.input, "file of whitespace-separated words");

  auto* vocab = app.add_subcommand("vocab", "build the vocabulary and short list from a JSONL corpus");
  vocab->add_option("--input", a.input, "JSONL dataset")->required();
  vocab->add_option("--gamma", a.gamma, "frequency filter ratio in (0, 1]");
  vocab->add_option("--out", a.out, "output directory")->required();

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic cloze dataset");
  gen->add_option("--out", a.out, "output directory")->required();
  gen->add_option("--vocab-size", a.spec.vocab_size);
  gen->add_option("--entity-pool", a.spec.entity_pool);
  gen->add_option("--doc-min", a.spec.doc_min_tokens, "minimum document tokens");
  gen->add_option("--doc-max", a.spec.doc_max_tokens, "maximum document tokens");
  gen->add_option("--train", a.spec.num_train);
  gen->add_option("--valid", a.spec.num_valid);
  gen->add_option("--test", a.spec.num_test);
  gen->add_option("--oov-rate", a.spec.oov_rate, "share of valid/test answers replaced by unseen words");
  gen->add_option("--seed", a.spec.seed);

  auto* train = app.add_subcommand("train", "train a reader; writes a checkpoint directory");
  train->add_option("--config", a.config, "key = value config file");
  train->add_option("--data", a.data, "directory with train.jsonl and valid.jsonl")->required();
  train->add_option("--out", a.out, "checkpoint directory")->required();

  auto* eval = app.add_subcommand("eval", "accuracy of a checkpoint on a JSONL dataset");
  eval->add_option("--model", a.model, "checkpoint directory")->required();
  eval->add_option("--input", a.input, "JSONL dataset")->required();
  eval->add_option("--out", a.out, "CSV output (default stdout)");

  auto* predict = app.add_subcommand("predict", "answer and top-5 candidates per example");
  predict->add_option("--model", a.model, "checkpoint directory")->required();
  predict->add_option("--input", a.input, "JSONL dataset")->required();
  predict->add_option("--out", a.out, "output path (default stdout)");

  auto* sweep = app.add_subcommand("sweep", "one seeded training run per value of a hyperparameter");
  sweep->add_option("--axis", a.axis, "merges, gamma or op")->required();
  sweep->add_option("--values", a.values, "comma-separated values")->required();
  sweep->add_option("--config", a.config, "key = value config file");
  sweep->add_option("--data", a.data, "directory with train/valid/test.jsonl")->required();
  sweep->add_option("--out", a.out, "CSV output (default stdout)");

  auto* attn = app.add_subcommand("attn-dump", "attention weights of one layer for one example");
  attn->add_option("--model", a.model, "checkpoint directory")->required();
  attn->add_option("--input", a.input, "JSONL dataset")->required();
  attn->add_option("--id", a.id, "example id (default: first example)");
  attn->add_option("--layer", a.layer, "layer, 1-based");
  attn->add_option("--out", a.out, "TSV output (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*bpe_train) cmd_bpe_train(a);
    else if (*segment) cmd_segment(a);
    else if (*vocab) cmd_vocab(a);
    else if (*gen) cmd_gen_data(a);
    else if (*train) cmd_train(a);
    else if (*eval) cmd_eval(a);
    else if (*predict) cmd_predict(a);
    else if (*sweep) cmd_sweep(a);
    else if (*attn) cmd_attn_dump(a);
  } catch (const saw::Error& e) {
    std::cerr << "error: " << saw::to_string(e.kind()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: io: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
