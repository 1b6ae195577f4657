#pragma once

// Cloze dataset files: one JSON object per line,
//   {"id": "...", "document": "tok tok ...", "query": "tok <blank> tok ...", "answer": "tok"}
// Document and query are pre-tokenized, space-delimited.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "saw/error.hpp"
#include "saw/example.hpp"

namespace saw {

inline std::vector<std::string> split_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) out.push_back(std::move(tok));
  return out;
}

inline std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i != 0) out += ' ';
    out += tokens[i];
  }
  return out;
}

/// Checks the example invariants; `require_answerable` additionally demands
/// that the answer occurs in the document.
inline void validate_example(const ClozeExample& ex, bool require_answerable = true) {
  if (ex.document.empty()) throw Error(ErrorKind::data, "empty document");
  if (ex.answer.empty()) throw Error(ErrorKind::data, "empty answer");
  placeholder_position(ex.query);
  if (require_answerable && !answer_in_document(ex)) {
    throw Error(ErrorKind::data, "unanswerable example '" + ex.id + "': answer '" + ex.answer + "' not in document");
  }
}

inline ClozeExample parse_example(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::data, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::data, "record is not a JSON object");
  auto field = [&](const char* name) -> std::string {
    auto it = j.find(name);
    if (it == j.end() || !it->is_string()) throw Error(ErrorKind::data, std::string("missing string field '") + name + "'");
    return it->get<std::string>();
  };
  ClozeExample ex;
  ex.id = field("id");
  ex.document = split_tokens(field("document"));
  ex.query = split_tokens(field("query"));
  ex.answer = field("answer");
  return ex;
}

inline std::string format_example(const ClozeExample& ex) {
  nlohmann::ordered_json j;
  j["id"] = ex.id;
  j["document"] = join_tokens(ex.document);
  j["query"] = join_tokens(ex.query);
  j["answer"] = ex.answer;
  return j.dump();
}

inline std::vector<ClozeExample> read_dataset(std::istream& in, bool require_answerable = true) {
  std::vector<ClozeExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto ex = parse_example(line);
      validate_example(ex, require_answerable);
      out.push_back(std::move(ex));
    } catch (const Error& e) {
      throw Error(e.kind(), "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<ClozeExample> load_dataset(const std::string& path, bool require_answerable = true) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open dataset '" + path + "'");
  try {
    return read_dataset(in, require_answerable);
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

inline void write_dataset(std::ostream& out, const std::vector<ClozeExample>& examples) {
  for (const auto& ex : examples) out << format_example(ex) << '\n';
}

inline void save_dataset(const std::string& path, const std::vector<ClozeExample>& examples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot open '" + path + "' for writing");
  write_dataset(out, examples);
}

/// Document and query token sequences of every example, for building a
/// vocabulary.
inline std::vector<std::vector<std::string>> token_sequences(const std::vector<ClozeExample>& examples) {
  std::vector<std::vector<std::string>> seqs;
  seqs.reserve(2 * examples.size());
  for (const auto& ex : examples) {
    seqs.push_back(ex.document);
    seqs.push_back(ex.query);
  }
  return seqs;
}

}  // namespace saw
