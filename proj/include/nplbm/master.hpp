#pragma once

// Master side of the distributed sampler.
//
// Row level: worker summaries are folded one at a time into a global row
// partition. Each local cluster moves as an indivisible batch, scored from its
// column-averaged statistics against the pooled statistics of every global
// cluster. Column level: one collapsed pass over columns scored from the
// pooled per-(global cluster, column) statistics. Neither step sees raw cells.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nplbm/niw.hpp"
#include "nplbm/partition.hpp"
#include "nplbm/sweep.hpp"
#include "nplbm/worker.hpp"

namespace nplbm {

struct GlobalRowState {
  std::size_t total_rows = 0;
  std::size_t columns = 0;
  Eigen::Index dim = 0;

  std::vector<std::size_t> sizes;       // n_k
  StatsTable column_stats;              // [k][j], pooled over member local clusters
  std::vector<SuffStats> cluster_stats; // pooled column-averaged stats of member local clusters
  std::map<std::pair<std::uint32_t, std::size_t>, int> assignment;  // (worker, h) -> k
  std::map<std::uint32_t, std::vector<int>> local_labels;
  std::size_t rows_accounted = 0;

  static GlobalRowState empty(std::size_t total_rows, std::size_t columns, Eigen::Index dim) {
    GlobalRowState s;
    s.total_rows = total_rows;
    s.columns = columns;
    s.dim = dim;
    return s;
  }

  int num_clusters() const noexcept { return static_cast<int>(sizes.size()); }
  bool complete() const noexcept { return rows_accounted == total_rows; }

  void validate() const {
    std::size_t total = 0;
    if (column_stats.size() != sizes.size() || cluster_stats.size() != sizes.size())
      throw std::logic_error("GlobalRowState: table sizes disagree");
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      total += sizes[k];
      if (column_stats[k].size() != columns) throw std::logic_error("GlobalRowState: ragged table");
      for (const auto& s : column_stats[k])
        if (s.count != sizes[k]) throw std::logic_error("GlobalRowState: column stats count != n_k");
      if (cluster_stats[k].count != sizes[k])
        throw std::logic_error("GlobalRowState: cluster stats count != n_k");
    }
    if (total != rows_accounted) throw std::logic_error("GlobalRowState: sizes != rows accounted");
    if (rows_accounted > total_rows) throw std::logic_error("GlobalRowState: too many rows");
  }
};

/// Local cluster h as one batch of n_h points: mean (1/p) sum_j T_hj,
/// scatter (1/p) sum_j S_hj.
inline SuffStats column_averaged(const WorkerSummary& summary, std::size_t h) {
  const auto& row = summary.column_stats.at(h);
  if (row.empty()) throw std::invalid_argument("column_averaged: summary has no columns");
  SuffStats out = SuffStats::empty(row.front().dim());
  out.count = summary.cluster_sizes.at(h);
  for (const auto& s : row) {
    out.mean += s.mean;
    out.scatter += s.scatter;
  }
  const double p = static_cast<double>(row.size());
  out.mean /= p;
  out.scatter /= p;
  symmetrize(out.scatter);
  return out;
}

/// Folds one worker summary into the global row partition. The first summary
/// seeds the global clusters verbatim; later local clusters are sampled into
/// an existing global cluster k (weight n_k p(batch | cluster k, G0)) or a
/// new one (weight alpha p(batch | G0)), in local-cluster order.
inline GlobalRowState join(GlobalRowState state, const WorkerSummary& summary,
                           const InferenceConfig& config, const NiwParams& prior, Rng& rng) {
  if (state.local_labels.contains(summary.worker_id))
    throw std::invalid_argument("join: worker " + std::to_string(summary.worker_id) +
                                " already joined");
  summary.validate();
  if (summary.num_columns() != state.columns || summary.dim() != state.dim)
    throw std::invalid_argument("join: summary shape does not match the global state");
  if (state.rows_accounted + summary.num_rows() > state.total_rows)
    throw std::invalid_argument("join: more rows than the dataset holds");

  const bool seeding = state.sizes.empty();
  const ConditionedNiw base(prior);
  std::vector<double> log_weights;
  for (std::size_t h = 0; h < summary.num_clusters(); ++h) {
    const SuffStats batch = column_averaged(summary, h);
    std::size_t k = state.sizes.size();
    if (!seeding) {
      log_weights.clear();
      for (std::size_t c = 0; c < state.sizes.size(); ++c) {
        log_weights.push_back(std::log(static_cast<double>(state.sizes[c])) +
                              ConditionedNiw(prior, state.cluster_stats[c]).log_marginal(batch));
      }
      log_weights.push_back(std::log(config.alpha) + base.log_marginal(batch));
      k = sample_categorical_log(log_weights, rng);
    }
    if (k == state.sizes.size()) {
      state.sizes.push_back(summary.cluster_sizes[h]);
      state.column_stats.push_back(summary.column_stats[h]);
      state.cluster_stats.push_back(batch);
    } else {
      state.sizes[k] += summary.cluster_sizes[h];
      for (std::size_t j = 0; j < state.columns; ++j)
        state.column_stats[k][j] = pool(state.column_stats[k][j], summary.column_stats[h][j]);
      state.cluster_stats[k] = pool(state.cluster_stats[k], batch);
    }
    state.assignment[{summary.worker_id, h}] = static_cast<int>(k);
  }
  state.local_labels[summary.worker_id] = summary.local_labels;
  state.rows_accounted += summary.num_rows();
  return state;
}

/// (global row cluster, column cluster) statistics T_kl, S_kl from the pooled per-column table.
inline StatsTable column_block_table(const GlobalRowState& state, const Membership& columns) {
  return pool_columns(state.column_stats, columns, state.dim);
}

/// One collapsed pass over columns j = 0..p-1 using only the pooled statistics.
inline Membership column_sweep_master(const GlobalRowState& state, const Membership& columns,
                                      const InferenceConfig& config, const NiwParams& prior,
                                      Rng& rng) {
  if (!state.complete())
    throw std::logic_error("column_sweep_master: join incomplete (" +
                           std::to_string(state.rows_accounted) + " of " +
                           std::to_string(state.total_rows) + " rows)");
  if (columns.size() != state.columns)
    throw std::invalid_argument("column_sweep_master: w has wrong length");
  const StatsTable items = transpose(state.column_stats);
  Membership out = columns;
  CrpSweep(items, out, config.beta, prior).sweep(rng);
  return out;
}

/// Global row labels in dataset order; shard e holds the e-th contiguous range.
inline std::vector<int> global_labels(const GlobalRowState& state,
                                      const std::vector<std::size_t>& shard_row_counts) {
  if (!state.complete()) throw std::logic_error("global_labels: join incomplete");
  std::vector<int> out;
  out.reserve(state.total_rows);
  for (std::size_t e = 0; e < shard_row_counts.size(); ++e) {
    const auto worker = static_cast<std::uint32_t>(e);
    const auto found = state.local_labels.find(worker);
    if (found == state.local_labels.end())
      throw std::out_of_range("global_labels: worker " + std::to_string(e) + " never joined");
    if (found->second.size() != shard_row_counts[e])
      throw std::invalid_argument("global_labels: row count mismatch for worker " +
                                  std::to_string(e));
    for (int h : found->second) {
      const auto entry = state.assignment.find({worker, static_cast<std::size_t>(h)});
      if (entry == state.assignment.end())
        throw std::out_of_range("global_labels: no assignment for worker " + std::to_string(e) +
                                " cluster " + std::to_string(h));
      out.push_back(entry->second);
    }
  }
  if (out.size() != state.total_rows)
    throw std::invalid_argument("global_labels: shard row counts do not cover the dataset");
  return out;
}

}  // namespace nplbm
