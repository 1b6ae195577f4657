#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace saw::utf8 {

// Length of the UTF-8 sequence introduced by lead byte `c`, or 0 if `c`
// cannot start a sequence.
inline std::size_t sequence_length(unsigned char c) {
  if (c < 0x80) return 1;
  if ((c >> 5) == 0x6) return 2;
  if ((c >> 4) == 0xE) return 3;
  if ((c >> 3) == 0x1E) return 4;
  return 0;
}

/// Splits `text` into unicode scalar values, each returned as its UTF-8 byte
/// sequence. Malformed bytes are passed through one byte at a time so that
/// the concatenation of the result always equals the input.
inline std::vector<std::string> split_chars(std::string_view text) {
  std::vector<std::string> out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t len = sequence_length(static_cast<unsigned char>(text[i]));
    bool ok = len != 0 && i + len <= text.size();
    for (std::size_t k = 1; ok && k < len; ++k) {
      ok = (static_cast<unsigned char>(text[i + k]) >> 6) == 0x2;
    }
    if (!ok) len = 1;
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

inline bool has_whitespace(std::string_view text) {
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') return true;
  }
  return false;
}

}  // namespace saw::utf8
