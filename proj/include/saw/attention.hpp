#pragma once

#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include "saw/reader.hpp"

namespace saw {

/// Attention weights of one gated-attention layer plus the final answer
/// distribution, for external plotting.
struct AttentionDump {
  std::size_t layer = 0;  // 1-based
  std::vector<std::string> document;
  std::vector<std::string> query;
  Tensor<double> alpha;  // document rows x query columns
  std::vector<double> p;
};

template <class T>
AttentionDump dump_attention(const ReaderModel<T>& model, const Lexicon& lexicon, const ClozeExample& ex,
                             std::size_t layer) {
  if (layer < 1 || layer > model.config().layers) {
    throw Error(ErrorKind::invalid_argument, "layer " + std::to_string(layer) + " out of range [1, " +
                                                 std::to_string(model.config().layers) + "]");
  }
  const auto tr = forward<T>(model, lexicon, ex, Mode::eval);
  const auto& alpha = tr.layers[layer - 1].gate.alpha;
  AttentionDump dump;
  dump.layer = layer;
  dump.document = ex.document;
  dump.query = ex.query;
  dump.alpha = Tensor<double>::matrix(alpha.rows(), alpha.cols());
  for (std::size_t i = 0; i < alpha.size(); ++i) dump.alpha[i] = static_cast<double>(alpha[i]);
  dump.p = tr.dist.per_position;
  return dump;
}

/// Tab-separated rows:
///   alpha <layer> <doc_pos> <query_pos> <doc_token> <query_token> <value>
///   p     <layer> <doc_pos> -           <doc_token> -             <value>
inline void write_attention(std::ostream& out, const AttentionDump& dump) {
  out << "kind\tlayer\tdoc_pos\tquery_pos\tdoc_token\tquery_token\tvalue\n";
  out << std::setprecision(10);
  for (std::size_t i = 0; i < dump.alpha.rows(); ++i) {
    for (std::size_t j = 0; j < dump.alpha.cols(); ++j) {
      out << "alpha\t" << dump.layer << '\t' << i << '\t' << j << '\t' << dump.document[i] << '\t' << dump.query[j]
          << '\t' << dump.alpha(i, j) << '\n';
    }
  }
  for (std::size_t i = 0; i < dump.p.size(); ++i) {
    out << "p\t" << dump.layer << '\t' << i << "\t-\t" << dump.document[i] << "\t-\t" << dump.p[i] << '\n';
  }
}

}  // namespace saw
