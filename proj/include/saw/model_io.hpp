#pragma once

// Reader checkpoint directory:
//   params.bin       tensor container (see checkpoint.hpp)
//   params.manifest  name / shape / offset per tensor
//   config.txt       ReaderConfig as "key = value" lines
//   merges.txt       merge table
//   shortlist.tsv    training vocabulary with the "#gamma" header
// The subword table is rebuilt from shortlist.tsv and merges.txt.

#include <filesystem>
#include <fstream>
#include <string>

#include "saw/checkpoint.hpp"
#include "saw/config.hpp"
#include "saw/reader.hpp"
#include "saw/vocabulary.hpp"

namespace saw {

template <class T>
struct LoadedReader {
  Lexicon lexicon;
  ReaderModel<T> model;
};

template <class T>
void save_reader(const std::string& dir, ReaderModel<T>& model, const Lexicon& lexicon) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path root(dir);
  checkpoint::save((root / "params.bin").string(), (root / "params.manifest").string(), model.params());
  {
    std::ofstream out(root / "config.txt");
    if (!out) throw Error(ErrorKind::io, "cannot write config.txt in '" + dir + "'");
    write_reader_config(out, model.config());
  }
  bpe::save_merge_table((root / "merges.txt").string(), lexicon.merges);
  std::ofstream sl(root / "shortlist.tsv", std::ios::binary);
  if (!sl) throw Error(ErrorKind::io, "cannot write shortlist.tsv in '" + dir + "'");
  write_short_list(sl, lexicon.vocab, lexicon.short_list);
}

inline Lexicon load_lexicon(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  std::ifstream sl(root / "shortlist.tsv", std::ios::binary);
  if (!sl) throw Error(ErrorKind::io, "missing shortlist.tsv in '" + dir + "'");
  auto [vocab, short_list] = read_short_list(sl);
  Lexicon lex;
  lex.vocab = std::move(vocab);
  lex.short_list = std::move(short_list);
  lex.merges = bpe::load_merge_table((root / "merges.txt").string());
  lex.subwords = bpe::build_subword_vocab(lex.vocab.to_freq_table(), lex.merges);
  return lex;
}

template <class T>
LoadedReader<T> load_reader(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  std::ifstream cfg(root / "config.txt");
  if (!cfg) throw Error(ErrorKind::io, "missing config.txt in '" + dir + "'");
  const ReaderConfig config = read_reader_config(cfg);
  LoadedReader<T> out{load_lexicon(dir), {}};
  out.model = ReaderModel<T>(config, out.lexicon.short_list.table_rows(), out.lexicon.subwords.size());
  auto params = out.model.params();
  checkpoint::load((root / "params.bin").string(), params);
  return out;
}

}  // namespace saw
