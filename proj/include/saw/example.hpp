#pragma once

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

#include "saw/error.hpp"

namespace saw {

/// Token marking the blanked position in a query.
inline constexpr std::string_view kPlaceholder = "<blank>";

/// A cloze triple: the answer is a single document word that fills the
/// placeholder in the query.
struct ClozeExample {
  std::string id;
  std::vector<std::string> document;
  std::vector<std::string> query;
  std::string answer;

  bool operator==(const ClozeExample&) const = default;
};

/// Position of the single placeholder in `query`; throws when there is not
/// exactly one.
inline std::size_t placeholder_position(const std::vector<std::string>& query) {
  std::size_t pos = query.size();
  std::size_t count = 0;
  for (std::size_t i = 0; i < query.size(); ++i) {
    if (query[i] == kPlaceholder) {
      pos = i;
      ++count;
    }
  }
  if (count == 0) throw Error(ErrorKind::data, "query has no placeholder");
  if (count > 1) throw Error(ErrorKind::data, "query has " + std::to_string(count) + " placeholders");
  return pos;
}

inline bool answer_in_document(const ClozeExample& ex) {
  return std::find(ex.document.begin(), ex.document.end(), ex.answer) != ex.document.end();
}

/// Number of distinct words in the document, i.e. the candidate set size.
inline std::size_t distinct_candidates(const ClozeExample& ex) {
  std::vector<std::string> words = ex.document;
  std::sort(words.begin(), words.end());
  return static_cast<std::size_t>(std::unique(words.begin(), words.end()) - words.begin());
}

}  // namespace saw
