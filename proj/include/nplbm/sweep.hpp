#pragma once

// Single-site collapsed Gibbs pass shared by every sampler in the library.
//
// An "item" is a row (or a column) summarized by one SuffStats per group, a
// group being a cluster of the other axis. Cluster k of items owns one block
// per group; the item's score for k is
//   log n_k + sum_g log p(item[g] | block(k, g), G0)
// and for a new cluster
//   log c   + sum_g log p(item[g] | G0).
// Blocks are independent given both partitions, so the row (or column)
// predictive factorizes over groups.

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "nplbm/data_matrix.hpp"
#include "nplbm/niw.hpp"
#include "nplbm/partition.hpp"

namespace nplbm {

/// table[k][g] of sufficient statistics.
using StatsTable = std::vector<std::vector<SuffStats>>;

/// For each row i and each column cluster l, the stats of row i's cells in l.
inline StatsTable row_item_stats(const DataMatrix& x, const Membership& columns) {
  if (columns.size() != x.cols()) throw std::invalid_argument("row_item_stats: w has wrong length");
  const auto dim = static_cast<Eigen::Index>(x.dim());
  const auto groups = static_cast<std::size_t>(columns.num_clusters());
  std::vector<std::vector<std::size_t>> members(groups);
  for (std::size_t j = 0; j < x.cols(); ++j)
    members[static_cast<std::size_t>(columns.label(j))].push_back(j);

  StatsTable out(x.rows());
  std::vector<DataMatrix::Cell> cells;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    out[i].reserve(groups);
    for (const auto& cols : members) {
      cells.clear();
      for (std::size_t j : cols) cells.push_back(x.cell(i, j));
      out[i].push_back(stats_from_points(cells, dim));
    }
  }
  return out;
}

/// table[k][j]: stats of column j's cells among rows of row cluster k.
inline StatsTable cluster_column_stats(const DataMatrix& x, const Membership& rows) {
  if (rows.size() != x.rows()) throw std::invalid_argument("cluster_column_stats: z has wrong length");
  const auto dim = static_cast<Eigen::Index>(x.dim());
  const auto clusters = static_cast<std::size_t>(rows.num_clusters());
  std::vector<std::vector<std::size_t>> members(clusters);
  for (std::size_t i = 0; i < x.rows(); ++i)
    members[static_cast<std::size_t>(rows.label(i))].push_back(i);

  StatsTable out(clusters);
  std::vector<DataMatrix::Cell> cells;
  for (std::size_t k = 0; k < clusters; ++k) {
    out[k].reserve(x.cols());
    for (std::size_t j = 0; j < x.cols(); ++j) {
      cells.clear();
      for (std::size_t i : members[k]) cells.push_back(x.cell(i, j));
      out[k].push_back(stats_from_points(cells, dim));
    }
  }
  return out;
}

/// Swaps the two axes of a rectangular table.
inline StatsTable transpose(const StatsTable& table) {
  if (table.empty()) return {};
  StatsTable out(table.front().size(), std::vector<SuffStats>(table.size()));
  for (std::size_t a = 0; a < table.size(); ++a)
    for (std::size_t b = 0; b < table[a].size(); ++b) out[b][a] = table[a][b];
  return out;
}

/// blocks[c][g] = pool of items[i][g] over items i in cluster c, items in index order.
inline StatsTable pool_by_cluster(const StatsTable& items, const Membership& membership,
                                  Eigen::Index dim) {
  const std::size_t groups = items.empty() ? 0 : items.front().size();
  std::vector<std::vector<std::vector<SuffStats>>> parts(
      static_cast<std::size_t>(membership.num_clusters()),
      std::vector<std::vector<SuffStats>>(groups));
  for (std::size_t i = 0; i < items.size(); ++i) {
    auto& cluster = parts[static_cast<std::size_t>(membership.label(i))];
    for (std::size_t g = 0; g < groups; ++g) cluster[g].push_back(items[i][g]);
  }
  StatsTable out(parts.size());
  for (std::size_t c = 0; c < parts.size(); ++c) {
    out[c].reserve(groups);
    for (auto& group : parts[c])
      out[c].push_back(group.empty() ? SuffStats::empty(dim) : pool(group));
  }
  return out;
}

/// Incremental collapsed-Gibbs state over one axis. Keeps the block table and
/// the conditioned NIW posterior of every block in step with `membership`.
class CrpSweep {
 public:
  CrpSweep(const StatsTable& items, Membership& membership, double concentration,
           const NiwParams& prior)
      : items_(items),
        membership_(membership),
        log_concentration_(std::log(concentration)),
        prior_(prior),
        dim_(prior.dim()) {
    if (items.size() != membership.size())
      throw std::invalid_argument("CrpSweep: item count does not match membership");
    membership.validate();
    blocks_ = pool_by_cluster(items_, membership_, dim_);
    cache_.assign(blocks_.size(), std::vector<std::optional<ConditionedNiw>>(groups()));
  }

  std::size_t groups() const noexcept { return items_.empty() ? 0 : items_.front().size(); }
  const StatsTable& blocks() const noexcept { return blocks_; }

  /// One pass over items 0..n-1: detach, score, sample, attach.
  void sweep(Rng& rng) {
    std::vector<double> log_weights;
    for (std::size_t i = 0; i < items_.size(); ++i) {
      detach(i);
      const int clusters = membership_.num_clusters();
      log_weights.assign(static_cast<std::size_t>(clusters) + 1, 0.0);
      for (int k = 0; k < clusters; ++k)
        log_weights[static_cast<std::size_t>(k)] = score_existing(i, k);
      log_weights.back() = score_new(i);
      attach(i, static_cast<int>(sample_categorical_log(log_weights, rng)));
    }
  }

  double score_existing(std::size_t i, int k) {
    double out = std::log(static_cast<double>(membership_.cluster_size(k)));
    for (std::size_t g = 0; g < groups(); ++g) out += conditioned(k, g).log_marginal(items_[i][g]);
    return out;
  }

  double score_new(std::size_t i) const {
    double out = log_concentration_;
    for (std::size_t g = 0; g < groups(); ++g) out += prior_.log_marginal(items_[i][g]);
    return out;
  }

  void detach(std::size_t i) {
    const auto removal = membership_.remove(i);
    const auto c = static_cast<std::size_t>(removal.cluster);
    if (removal.vanished) {
      blocks_.erase(blocks_.begin() + removal.cluster);
      cache_.erase(cache_.begin() + removal.cluster);
      return;
    }
    for (std::size_t g = 0; g < groups(); ++g) {
      blocks_[c][g] = unpool(blocks_[c][g], items_[i][g]);
      cache_[c][g].reset();
    }
  }

  void attach(std::size_t i, int k) {
    const auto c = static_cast<std::size_t>(k);
    membership_.assign(i, k);
    if (c == blocks_.size()) {
      blocks_.push_back(items_[i]);
      cache_.emplace_back(groups());
      return;
    }
    for (std::size_t g = 0; g < groups(); ++g) {
      blocks_[c][g] = pool(blocks_[c][g], items_[i][g]);
      cache_[c][g].reset();
    }
  }

 private:
  const ConditionedNiw& conditioned(int k, std::size_t g) {
    auto& slot = cache_[static_cast<std::size_t>(k)][g];
    if (!slot) slot.emplace(prior_.params(), blocks_[static_cast<std::size_t>(k)][g]);
    return *slot;
  }

  const StatsTable& items_;
  Membership& membership_;
  double log_concentration_;
  ConditionedNiw prior_;
  Eigen::Index dim_;
  StatsTable blocks_;
  std::vector<std::vector<std::optional<ConditionedNiw>>> cache_;
};

/// blocks[k][l] = pool over columns j with w_j = l of table[k][j].
inline StatsTable pool_columns(const StatsTable& table, const Membership& columns,
                               Eigen::Index dim) {
  return transpose(pool_by_cluster(transpose(table), columns, dim));
}

/// sum_{k,l} log p(block(k,l) | G0) plus the CRP log-priors of both partitions.
inline double log_posterior_proxy(const StatsTable& blocks, const Membership& rows,
                                  const Membership& columns, const InferenceConfig& config,
                                  const NiwParams& prior) {
  const ConditionedNiw base(prior);
  double out = crp_log_prior(rows, config.alpha) + crp_log_prior(columns, config.beta);
  for (const auto& row : blocks)
    for (const auto& block : row) out += base.log_marginal(block);
  return out;
}

}  // namespace nplbm
