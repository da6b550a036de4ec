#pragma once

// Canonical wire form of a WorkerSummary. All integers little-endian,
// doubles as little-endian IEEE-754 binary64:
//
//   worker_id : u32
//   K         : u32   local clusters
//   p         : u32   columns
//   d         : u32   cell dimension
//   sizes     : K x u32
//   labels    : n x u32, n = sum(sizes)
//   stats     : K * p records, cluster-major, each
//                 count   : u64
//                 mean    : d x f64
//                 scatter : d*d x f64, row-major
//
// Total length 16 + 4K + 4n + K p (8 + 8d + 8d^2). There is no version
// field; a payload whose length disagrees with its header is rejected.

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nplbm/worker.hpp"

namespace nplbm {

class WireFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::size_t serialized_size(std::size_t clusters, std::size_t rows, std::size_t columns,
                                   std::size_t dim) {
  return 16 + 4 * clusters + 4 * rows + clusters * columns * (8 + 8 * dim + 8 * dim * dim);
}

namespace detail {

class ByteWriter {
 public:
  explicit ByteWriter(std::size_t reserve) { bytes_.reserve(reserve); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  std::vector<std::byte> take() { return std::move(bytes_); }

 private:
  void put(std::uint64_t v, int width) {
    for (int b = 0; b < width; ++b) bytes_.push_back(static_cast<std::byte>((v >> (8 * b)) & 0xFF));
  }
  std::vector<std::byte> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::byte> bytes) : bytes_(bytes) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  std::uint64_t get(int width) {
    if (remaining() < static_cast<std::size_t>(width))
      throw WireFormatError("summary payload truncated at byte " + std::to_string(pos_));
    std::uint64_t v = 0;
    for (int b = 0; b < width; ++b)
      v |= static_cast<std::uint64_t>(std::to_integer<std::uint8_t>(bytes_[pos_ + b])) << (8 * b);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  std::span<const std::byte> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<std::byte> serialize_summary(const WorkerSummary& summary) {
  summary.validate();
  const std::size_t k = summary.num_clusters();
  const std::size_t p = summary.num_columns();
  const auto d = static_cast<std::size_t>(summary.dim());
  detail::ByteWriter out(serialized_size(k, summary.num_rows(), p, d));
  out.u32(summary.worker_id);
  out.u32(static_cast<std::uint32_t>(k));
  out.u32(static_cast<std::uint32_t>(p));
  out.u32(static_cast<std::uint32_t>(d));
  for (std::size_t s : summary.cluster_sizes) out.u32(static_cast<std::uint32_t>(s));
  for (int l : summary.local_labels) out.u32(static_cast<std::uint32_t>(l));
  for (const auto& row : summary.column_stats) {
    for (const auto& s : row) {
      out.u64(s.count);
      for (Eigen::Index a = 0; a < s.dim(); ++a) out.f64(s.mean(a));
      for (Eigen::Index a = 0; a < s.dim(); ++a)
        for (Eigen::Index b = 0; b < s.dim(); ++b) out.f64(s.scatter(a, b));
    }
  }
  return out.take();
}

inline WorkerSummary deserialize_summary(std::span<const std::byte> bytes) {
  detail::ByteReader in(bytes);
  WorkerSummary out;
  out.worker_id = in.u32();
  const std::size_t k = in.u32();
  const std::size_t p = in.u32();
  const std::size_t d = in.u32();
  if (k == 0 || p == 0 || d == 0) throw WireFormatError("summary header has a zero dimension");
  if (in.remaining() < 4 * k) throw WireFormatError("summary payload truncated in sizes");
  std::size_t rows = 0;
  out.cluster_sizes.reserve(k);
  for (std::size_t h = 0; h < k; ++h) {
    const std::size_t size = in.u32();
    if (size == 0) throw WireFormatError("summary has empty cluster " + std::to_string(h));
    out.cluster_sizes.push_back(size);
    rows += size;
  }
  if (bytes.size() != serialized_size(k, rows, p, d))
    throw WireFormatError("summary payload is " + std::to_string(bytes.size()) +
                          " bytes, header implies " +
                          std::to_string(serialized_size(k, rows, p, d)));
  out.local_labels.reserve(rows);
  for (std::size_t i = 0; i < rows; ++i) out.local_labels.push_back(static_cast<int>(in.u32()));
  const auto dim = static_cast<Eigen::Index>(d);
  out.column_stats.assign(k, {});
  for (std::size_t h = 0; h < k; ++h) {
    out.column_stats[h].reserve(p);
    for (std::size_t j = 0; j < p; ++j) {
      SuffStats s = SuffStats::empty(dim);
      s.count = in.u64();
      for (Eigen::Index a = 0; a < dim; ++a) s.mean(a) = in.f64();
      for (Eigen::Index a = 0; a < dim; ++a)
        for (Eigen::Index b = 0; b < dim; ++b) s.scatter(a, b) = in.f64();
      out.column_stats[h].push_back(std::move(s));
    }
  }
  try {
    out.validate();
  } catch (const std::logic_error& e) {
    throw WireFormatError(e.what());
  }
  return out;
}

}  // namespace nplbm
