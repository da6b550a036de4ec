#pragma once

// Centralized collapsed Gibbs sampler for the non-parametric latent block
// model: alternate one full pass over row memberships and one over column
// memberships.

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "nplbm/data_matrix.hpp"
#include "nplbm/fit_result.hpp"
#include "nplbm/niw.hpp"
#include "nplbm/partition.hpp"
#include "nplbm/sweep.hpp"

namespace nplbm {

/// Random stream ids. Worker e draws from stream e; the centralized row sweep
/// shares stream 0 with worker 0 so that a one-worker distributed fit replays it.
inline constexpr std::uint64_t kRowStream = 0;
inline constexpr std::uint64_t kMasterStream = 0xFFFF'FFFF'0000'0001ULL;

/// Per-(row cluster, column) and per-(row cluster, column cluster) statistics
/// of a co-partition, computed from scratch.
struct BlockStatsTable {
  StatsTable by_column;  // [k][j]
  StatsTable by_block;   // [k][l]

  static BlockStatsTable build(const DataMatrix& x, const Membership& rows,
                               const Membership& columns) {
    BlockStatsTable out;
    out.by_column = cluster_column_stats(x, rows);
    out.by_block = pool_columns(out.by_column, columns, static_cast<Eigen::Index>(x.dim()));
    return out;
  }
};

namespace detail {

inline void check_inputs(const DataMatrix& x, const Membership& rows, const Membership& columns,
                         const NiwParams& prior) {
  if (rows.size() != x.rows()) throw std::invalid_argument("row membership length != n");
  if (columns.size() != x.cols()) throw std::invalid_argument("column membership length != p");
  if (static_cast<std::size_t>(prior.dim()) != x.dim())
    throw std::invalid_argument("prior dimension != cell dimension");
}

}  // namespace detail

/// One pass over rows i = 0..n-1 given the column partition.
inline Membership row_sweep(const DataMatrix& x, const Membership& rows, const Membership& columns,
                            const InferenceConfig& config, const NiwParams& prior, Rng& rng) {
  detail::check_inputs(x, rows, columns, prior);
  const StatsTable items = row_item_stats(x, columns);
  Membership out = rows;
  CrpSweep(items, out, config.alpha, prior).sweep(rng);
  return out;
}

/// One pass over columns j = 0..p-1 given the row partition.
inline Membership column_sweep(const DataMatrix& x, const Membership& rows,
                               const Membership& columns, const InferenceConfig& config,
                               const NiwParams& prior, Rng& rng) {
  detail::check_inputs(x, rows, columns, prior);
  const StatsTable items = transpose(cluster_column_stats(x, rows));
  Membership out = columns;
  CrpSweep(items, out, config.beta, prior).sweep(rng);
  return out;
}

/// Starts from one row cluster and one column cluster and runs
/// `config.iterations` row-then-column alternations.
inline FitResult fit_centralized(const DataMatrix& x, const InferenceConfig& config,
                                 const NiwParams& prior) {
  using Clock = std::chrono::steady_clock;
  config.validate();
  prior.validate();
  const auto start = Clock::now();

  Membership rows = Membership::single_cluster(x.rows());
  Membership columns = Membership::single_cluster(x.cols());
  FitResult result;
  result.config = config;
  result.mode = "centralized";

  for (int it = 0; it < config.iterations; ++it) {
    const auto iteration_start = Clock::now();
    const auto iteration = static_cast<std::uint64_t>(it);
    Rng row_rng = Rng::derive(config.seed, kRowStream, iteration);
    rows = row_sweep(x, rows, columns, config, prior, row_rng);
    Rng column_rng = Rng::derive(config.seed, kMasterStream, iteration);
    columns = column_sweep(x, rows, columns, config, prior, column_rng);

    const auto blocks = BlockStatsTable::build(x, rows, columns);
    TraceRecord record;
    record.iteration = it + 1;
    record.row_clusters = rows.num_clusters();
    record.column_clusters = columns.num_clusters();
    record.log_posterior = log_posterior_proxy(blocks.by_block, rows, columns, config, prior);
    record.wall_ms =
        std::chrono::duration<double, std::milli>(Clock::now() - iteration_start).count();
    result.trace.push_back(record);
  }

  result.row_labels = rows.labels();
  result.column_labels = columns.labels();
  result.row_clusters = rows.num_clusters();
  result.column_clusters = columns.num_clusters();
  result.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  return result;
}

}  // namespace nplbm
