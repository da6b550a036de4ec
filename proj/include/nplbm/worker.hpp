#pragma once

// Worker side of the distributed sampler: a local row pass over the shard
// given the broadcast column partition, then the summary sent to the master.

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nplbm/data_matrix.hpp"
#include "nplbm/gibbs.hpp"
#include "nplbm/niw.hpp"
#include "nplbm/partition.hpp"
#include "nplbm/sweep.hpp"

namespace nplbm {

struct WorkerShard {
  std::uint32_t worker_id = 0;
  DataMatrix data;
  Membership local_rows;
};

/// Sizes and per-(local cluster, column) statistics of one shard; the only
/// thing a worker hands to the master.
struct WorkerSummary {
  std::uint32_t worker_id = 0;
  std::vector<std::size_t> cluster_sizes;
  StatsTable column_stats;  // [h][j]
  std::vector<int> local_labels;

  std::size_t num_clusters() const noexcept { return cluster_sizes.size(); }
  std::size_t num_columns() const noexcept {
    return column_stats.empty() ? 0 : column_stats.front().size();
  }
  Eigen::Index dim() const {
    return column_stats.empty() || column_stats.front().empty() ? 0
                                                                : column_stats.front().front().dim();
  }
  std::size_t num_rows() const noexcept { return local_labels.size(); }

  void validate() const {
    const auto fail = [this](const std::string& what) {
      throw std::logic_error("WorkerSummary " + std::to_string(worker_id) + ": " + what);
    };
    if (column_stats.size() != cluster_sizes.size()) fail("stats table has wrong row count");
    std::size_t total = 0;
    for (std::size_t h = 0; h < cluster_sizes.size(); ++h) {
      if (cluster_sizes[h] == 0) fail("empty cluster " + std::to_string(h));
      if (column_stats[h].size() != num_columns()) fail("ragged stats table");
      for (const auto& s : column_stats[h]) {
        if (s.count != cluster_sizes[h]) fail("stats count differs from cluster size");
        if (s.dim() != dim()) fail("mixed dimensions");
      }
      total += cluster_sizes[h];
    }
    if (total != local_labels.size()) fail("cluster sizes do not sum to the row count");
    std::vector<std::size_t> counted(cluster_sizes.size(), 0);
    for (int l : local_labels) {
      if (l < 0 || static_cast<std::size_t>(l) >= cluster_sizes.size()) fail("label out of range");
      ++counted[static_cast<std::size_t>(l)];
    }
    if (counted != cluster_sizes) fail("labels disagree with cluster sizes");
  }

  friend bool operator==(const WorkerSummary& a, const WorkerSummary& b) {
    if (a.worker_id != b.worker_id || a.cluster_sizes != b.cluster_sizes ||
        a.local_labels != b.local_labels || a.column_stats.size() != b.column_stats.size())
      return false;
    for (std::size_t h = 0; h < a.column_stats.size(); ++h) {
      if (a.column_stats[h].size() != b.column_stats[h].size()) return false;
      for (std::size_t j = 0; j < a.column_stats[h].size(); ++j) {
        const auto& x = a.column_stats[h][j];
        const auto& y = b.column_stats[h][j];
        if (x.count != y.count || x.mean != y.mean || x.scatter != y.scatter) return false;
      }
    }
    return true;
  }
};

/// Contiguous, even row ranges; the first n mod E workers get one extra row.
/// Every shard starts with all its rows in one local cluster.
inline std::vector<WorkerShard> make_shards(const DataMatrix& x, int workers) {
  if (workers < 1) throw std::invalid_argument("make_shards: workers must be >= 1");
  const auto count = static_cast<std::size_t>(workers);
  if (x.rows() < count)
    throw std::invalid_argument("make_shards: more workers (" + std::to_string(workers) +
                                ") than rows (" + std::to_string(x.rows()) + ")");
  std::vector<WorkerShard> shards;
  shards.reserve(count);
  const std::size_t base = x.rows() / count;
  const std::size_t extra = x.rows() % count;
  std::size_t first = 0;
  for (std::size_t e = 0; e < count; ++e) {
    const std::size_t rows = base + (e < extra ? 1 : 0);
    shards.push_back({static_cast<std::uint32_t>(e), x.row_range(first, rows),
                      Membership::single_cluster(rows)});
    first += rows;
  }
  return shards;
}

/// One local row pass. Identical to the centralized row pass on the shard's rows.
inline void local_row_sweep(WorkerShard& shard, const Membership& columns,
                            const InferenceConfig& config, const NiwParams& prior, Rng& rng) {
  shard.local_rows = row_sweep(shard.data, shard.local_rows, columns, config, prior, rng);
}

inline WorkerSummary summarize(const WorkerShard& shard) {
  WorkerSummary out;
  out.worker_id = shard.worker_id;
  out.cluster_sizes = shard.local_rows.sizes();
  out.column_stats = cluster_column_stats(shard.data, shard.local_rows);
  out.local_labels = shard.local_rows.labels();
  return out;
}

}  // namespace nplbm
