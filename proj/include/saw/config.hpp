#pragma once

// Plain-text configuration: one "key = value" per line, '#' starts a comment.
// Keys are the field names of ReaderConfig and TrainConfig.

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "saw/error.hpp"
#include "saw/reader.hpp"
#include "saw/training.hpp"

namespace saw {

using KeyValues = std::map<std::string, std::string>;

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline KeyValues parse_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::config, "config line " + std::to_string(line_no) + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key.empty()) throw Error(ErrorKind::config, "config line " + std::to_string(line_no) + ": empty key");
    kv[key] = value;
  }
  return kv;
}

namespace detail {

inline std::size_t to_size(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long n = std::stoll(v, &used);
    if (used != v.size() || n < 0) throw std::invalid_argument(v);
    return static_cast<std::size_t>(n);
  } catch (const std::logic_error&) {
    throw Error(ErrorKind::config, "config key '" + key + "': expected a non-negative integer, got '" + v + "'");
  }
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::logic_error&) {
    throw Error(ErrorKind::config, "config key '" + key + "': expected a number, got '" + v + "'");
  }
}

}  // namespace detail

/// Applies recognised keys; returns false for a key neither config knows.
inline bool apply_key(const std::string& key, const std::string& value, ReaderConfig& rc, TrainConfig& tc) {
  using detail::to_double;
  using detail::to_size;
  if (key == "integration_op") rc.integration_op = parse_integration_op(value);
  else if (key == "layers") rc.layers = to_size(key, value);
  else if (key == "hidden") rc.hidden = to_size(key, value);
  else if (key == "word_dim") rc.word_dim = to_size(key, value);
  else if (key == "subword_dim") rc.subword_dim = to_size(key, value);
  else if (key == "gamma") rc.gamma = to_double(key, value);
  else if (key == "num_merges") rc.num_merges = to_size(key, value);
  else if (key == "dropout") rc.dropout = to_double(key, value);
  else if (key == "init_scale") rc.init_scale = to_double(key, value);
  else if (key == "batch_size") tc.batch_size = to_size(key, value);
  else if (key == "base_lr") tc.base_lr = to_double(key, value);
  else if (key == "clip_threshold") tc.clip_threshold = to_double(key, value);
  else if (key == "epochs") tc.epochs = to_size(key, value);
  else if (key == "seed") tc.seed = to_size(key, value);
  else if (key == "adam_beta1") tc.adam_beta1 = to_double(key, value);
  else if (key == "adam_beta2") tc.adam_beta2 = to_double(key, value);
  else if (key == "adam_epsilon") tc.adam_epsilon = to_double(key, value);
  else if (key == "lr_decay_after") tc.lr_decay_after = to_size(key, value);
  else return false;
  return true;
}

struct RunConfig {
  ReaderConfig reader;
  TrainConfig train;
};

inline RunConfig parse_run_config(std::istream& in) {
  RunConfig rc;
  for (const auto& [key, value] : parse_key_values(in)) {
    if (!apply_key(key, value, rc.reader, rc.train)) throw Error(ErrorKind::config, "unknown config key '" + key + "'");
  }
  rc.reader.validate();
  rc.train.validate();
  return rc;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open config '" + path + "'");
  return parse_run_config(in);
}

/// SAW_SEED, when set, replaces the configured seed.
inline void apply_seed_override(TrainConfig& tc) {
  if (const char* s = std::getenv("SAW_SEED"); s != nullptr && *s != '\0') tc.seed = detail::to_size("SAW_SEED", s);
}

inline void write_reader_config(std::ostream& out, const ReaderConfig& c) {
  out << std::setprecision(17);
  out << "integration_op = " << to_string(c.integration_op) << '\n'
      << "layers = " << c.layers << '\n'
      << "hidden = " << c.hidden << '\n'
      << "word_dim = " << c.word_dim << '\n'
      << "subword_dim = " << c.subword_dim << '\n'
      << "gamma = " << c.gamma << '\n'
      << "num_merges = " << c.num_merges << '\n'
      << "dropout = " << c.dropout << '\n'
      << "init_scale = " << c.init_scale << '\n';
}

inline ReaderConfig read_reader_config(std::istream& in) {
  ReaderConfig rc;
  TrainConfig unused;
  for (const auto& [key, value] : parse_key_values(in)) {
    if (!apply_key(key, value, rc, unused)) throw Error(ErrorKind::config, "unknown model config key '" + key + "'");
  }
  rc.validate();
  return rc;
}

}  // namespace saw
