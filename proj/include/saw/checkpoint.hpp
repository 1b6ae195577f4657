#pragma once

// Parameter container.
//
// Binary file (all integers little-endian u32, values little-endian IEEE-754
// binary32):
//
//   "SAWT"  magic, 4 bytes
//   version (= 1)
//   tensor count
//   per tensor:
//     name length, name bytes (UTF-8, no terminator)
//     rank, then rank dimension sizes
//     product(dims) float32 values, row-major
//
// The manifest is plain text with one "name<TAB>shape<TAB>offset" line per
// tensor, where shape is "AxB" and offset is the byte offset of the first value.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "saw/error.hpp"
#include "saw/tensor.hpp"

namespace saw::checkpoint {

inline constexpr std::array<char, 4> kMagic{'S', 'A', 'W', 'T'};
inline constexpr std::uint32_t kVersion = 1;

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw Error(ErrorKind::data, "checkpoint: truncated file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void put_f32(std::ostream& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }
inline float get_f32(std::istream& in) { return std::bit_cast<float>(get_u32(in)); }

}  // namespace detail

struct TensorRecord {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<float> values;
  std::uint64_t offset = 0;
};

template <class T>
void write(std::ostream& bin, std::ostream& manifest, const ParamStore<T>& params) {
  std::uint64_t offset = 12;
  bin.write(kMagic.data(), 4);
  detail::put_u32(bin, kVersion);
  detail::put_u32(bin, static_cast<std::uint32_t>(params.size()));
  for (const auto& e : params.entries()) {
    const auto& t = e.param->value;
    detail::put_u32(bin, static_cast<std::uint32_t>(e.name.size()));
    bin.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    detail::put_u32(bin, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) detail::put_u32(bin, static_cast<std::uint32_t>(d));
    offset += 4 + e.name.size() + 4 + 4 * t.rank();
    manifest << e.name << '\t' << shape_string(t.shape()) << '\t' << offset << '\n';
    for (T v : t.values()) detail::put_f32(bin, static_cast<float>(v));
    offset += 4 * t.size();
  }
  if (!bin || !manifest) throw Error(ErrorKind::io, "checkpoint: write failed");
}

inline std::vector<TensorRecord> read_records(std::istream& bin) {
  std::array<char, 4> magic{};
  if (!bin.read(magic.data(), 4) || magic != kMagic) throw Error(ErrorKind::data, "checkpoint: bad magic");
  if (detail::get_u32(bin) != kVersion) throw Error(ErrorKind::data, "checkpoint: unsupported version");
  const std::uint32_t count = detail::get_u32(bin);
  std::vector<TensorRecord> records;
  std::uint64_t offset = 12;
  for (std::uint32_t k = 0; k < count; ++k) {
    TensorRecord rec;
    rec.name.resize(detail::get_u32(bin));
    if (!bin.read(rec.name.data(), static_cast<std::streamsize>(rec.name.size()))) {
      throw Error(ErrorKind::data, "checkpoint: truncated name");
    }
    const std::uint32_t rank = detail::get_u32(bin);
    if (rank == 0 || rank > 2) throw Error(ErrorKind::data, "checkpoint: bad rank for '" + rec.name + "'");
    std::size_t n = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      rec.shape.push_back(detail::get_u32(bin));
      n *= rec.shape.back();
    }
    offset += 4 + rec.name.size() + 4 + 4 * rank;
    rec.offset = offset;
    rec.values.resize(n);
    for (auto& v : rec.values) v = detail::get_f32(bin);
    offset += 4 * n;
    records.push_back(std::move(rec));
  }
  return records;
}

/// Loads values into `params`; names and shapes must match exactly.
template <class T>
void read(std::istream& bin, ParamStore<T>& params) {
  auto records = read_records(bin);
  if (records.size() != params.size()) {
    throw Error(ErrorKind::data, "checkpoint: holds " + std::to_string(records.size()) + " tensors, model expects " +
                                     std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& e = params.entries()[i];
    const auto& rec = records[i];
    if (rec.name != e.name) throw Error(ErrorKind::data, "checkpoint: expected '" + e.name + "', found '" + rec.name + "'");
    if (rec.shape != e.param->value.shape()) {
      throw Error(ErrorKind::data, "checkpoint: shape mismatch for '" + e.name + "': " + shape_string(rec.shape) +
                                       " vs " + shape_string(e.param->value.shape()));
    }
    auto& dst = e.param->value.values();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = static_cast<T>(rec.values[k]);
  }
}

template <class T>
void save(const std::string& bin_path, const std::string& manifest_path, const ParamStore<T>& params) {
  std::ofstream bin(bin_path, std::ios::binary);
  std::ofstream manifest(manifest_path);
  if (!bin || !manifest) throw Error(ErrorKind::io, "checkpoint: cannot open '" + bin_path + "' for writing");
  write(bin, manifest, params);
}

template <class T>
void load(const std::string& bin_path, ParamStore<T>& params) {
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw Error(ErrorKind::io, "checkpoint: cannot open '" + bin_path + "'");
  read(bin, params);
}

}  // namespace saw::checkpoint
