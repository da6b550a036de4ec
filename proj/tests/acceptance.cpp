// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion whose hardware precondition holds fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "nplbm/nplbm.hpp"
#include "oracles.hpp"
#include "test_support.hpp"
#include "toy_posterior.hpp"

namespace {

using Clock = std::chrono::steady_clock;
using nplbm::DataMatrix;
using nplbm::InferenceConfig;
using nplbm::Membership;
using nplbm::Rng;
using nplbm::SuffStats;
using nplbm::Vector;

struct Verdict {
  bool pass = false;
  std::string detail;
  bool applicable = true;  // false when the machine cannot meet the stated precondition
};

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

// ------------------------------------------------------------------------ 1

Verdict perfect_recovery() {
  int central_ok = 0, distributed_ok = 0;
  double slowest = 0.0;
  std::ostringstream missed;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto data = nplbm::generate(nplbm::SyntheticSpec::separated_grid(2000, 90, 1, 10, 3, seed));
    const auto prior = nplbm::empirical_prior(data.matrix);
    InferenceConfig config;
    config.iterations = 100;
    config.seed = seed;
    const auto judge = [&](const nplbm::FitResult& r, double secs) {
      slowest = std::max(slowest, secs);
      return nplbm::ari(r.row_labels, data.row_labels) == 1.0 &&
             nplbm::nmi(r.row_labels, data.row_labels) == 1.0 &&
             r.row_clusters * r.column_clusters == 30 && secs <= 300.0;
    };
    auto t = Clock::now();
    const auto central = nplbm::fit_centralized(data.matrix, config, prior);
    const bool central_pass = judge(central, seconds_since(t));
    config.workers = 8;
    t = Clock::now();
    const auto distributed = nplbm::fit_distributed(data.matrix, config, prior);
    const bool distributed_pass = judge(distributed, seconds_since(t));
    central_ok += central_pass;
    distributed_ok += distributed_pass;
    if (!central_pass || !distributed_pass)
      missed << " seed " << seed << " (K=" << central.row_clusters << "/" << distributed.row_clusters
             << " L=" << central.column_clusters << "/" << distributed.column_clusters << ")";
  }
  std::ostringstream s;
  s << "centralized " << central_ok << "/10, distributed(8) " << distributed_ok
    << "/10 seeds with ARI=NMI=1 and K*L=30; slowest run " << slowest << " s";
  if (!missed.str().empty()) s << "; missed" << missed.str();
  return {central_ok >= 9 && distributed_ok >= 9, s.str()};
}

// ------------------------------------------------------------------------ 2

Verdict single_worker_join() {
  const auto data = nplbm::generate(nplbm::SyntheticSpec::separated_grid(300, 30, 1, 5, 3, 2));
  const auto prior = nplbm::empirical_prior(data.matrix);
  InferenceConfig config;
  config.iterations = 25;
  config.seed = 2;
  config.workers = 1;
  config.deterministic = true;

  // The runtime's per-iteration steps, replayed with the same streams.
  auto shards = nplbm::make_shards(data.matrix, 1);
  auto columns = Membership::single_cluster(data.matrix.cols());
  bool sizes_equal = true;
  std::vector<int> rows;
  for (int it = 0; it < config.iterations; ++it) {
    Rng worker_rng = Rng::derive(config.seed, 0, static_cast<std::uint64_t>(it));
    nplbm::local_row_sweep(shards[0], columns, config, prior, worker_rng);
    const auto summary = nplbm::deserialize_summary(nplbm::serialize_summary(nplbm::summarize(shards[0])));
    Rng master_rng = Rng::derive(config.seed, nplbm::kMasterStream, static_cast<std::uint64_t>(it));
    const auto state = nplbm::join(nplbm::GlobalRowState::empty(300, 30, 1), summary, config, prior, master_rng);
    sizes_equal = sizes_equal && state.sizes == summary.cluster_sizes;
    for (std::size_t h = 0; h < summary.num_clusters(); ++h)
      sizes_equal = sizes_equal && state.assignment.at({0u, h}) == static_cast<int>(h);
    rows = nplbm::global_labels(state, {300});
    columns = nplbm::column_sweep_master(state, columns, config, prior, master_rng);
  }
  const auto fit = nplbm::fit_distributed(data.matrix, config, prior);
  const bool replayed = fit.row_labels == rows && fit.column_labels == columns.labels();
  bool valid = true;
  try {
    Membership::from_labels(fit.row_labels);
    Membership::from_labels(fit.column_labels);
  } catch (const std::exception&) {
    valid = false;
  }
  std::ostringstream s;
  s << "global sizes == local sizes every iteration: " << (sizes_equal ? "yes" : "no")
    << "; fit matches replay: " << (replayed ? "yes" : "no") << "; valid labels: " << (valid ? "yes" : "no")
    << "; K=" << fit.row_clusters << " L=" << fit.column_clusters;
  return {sizes_equal && replayed && valid, s.str()};
}

// ------------------------------------------------------------------------ 3

std::vector<Vector> cells_of(const DataMatrix& x, const std::vector<std::size_t>& rows,
                             const std::vector<std::size_t>& cols) {
  std::vector<Vector> out;
  for (std::size_t i : rows)
    for (std::size_t j : cols) out.emplace_back(x.cell(i, j));
  return out;
}

Verdict statistics_only() {
  std::mt19937_64 gen(2024);
  double worst_stats = 0.0, worst_pred = 0.0;
  std::size_t stats_checked = 0, preds_checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 4 + gen() % 57, p = 1 + gen() % 8, d = 1 + gen() % 3;
    const auto k = 1 + gen() % 4, l = 1 + gen() % std::min<std::size_t>(p, 3);
    const auto data = nplbm::generate(nplbm::SyntheticSpec::separated_grid(n, p, d, k, l, gen()));
    const auto& x = data.matrix;
    const auto prior = nplbm::empirical_prior(x);
    const int workers = 1 + static_cast<int>(gen() % std::min<std::size_t>(n, 4));
    std::vector<int> random_w(p);
    for (auto& v : random_w) v = static_cast<int>(gen() % 3);
    const auto w = testing_support::dense(random_w);

    auto shards = nplbm::make_shards(x, workers);
    Rng rng(gen());
    for (auto& shard : shards) nplbm::local_row_sweep(shard, w, {}, prior, rng);

    // Worker row predictives: local block (k, l) without row i, against the row's cells in l.
    std::size_t first = 0;
    for (const auto& shard : shards) {
      const auto& z = shard.local_rows;
      for (std::size_t i = 0; i < shard.data.rows(); ++i) {
        for (int kk = 0; kk < z.num_clusters(); ++kk) {
          for (int ll = 0; ll < w.num_clusters(); ++ll) {
            std::vector<std::size_t> members, cols;
            for (std::size_t r = 0; r < shard.data.rows(); ++r)
              if (r != i && z.label(r) == kk) members.push_back(first + r);
            for (std::size_t j = 0; j < p; ++j)
              if (w.label(j) == ll) cols.push_back(j);
            if (members.empty()) continue;
            const auto cluster_cells = cells_of(x, members, cols);
            const auto row_cells = cells_of(x, {first + i}, cols);
            auto joint_cells = cluster_cells;
            joint_cells.insert(joint_cells.end(), row_cells.begin(), row_cells.end());
            const auto de = static_cast<Eigen::Index>(d);
            const double from_raw = oracle::explicit_log_predictive(
                prior, oracle::direct_stats(cluster_cells, de), oracle::direct_stats(joint_cells, de),
                row_cells.size());
            // Statistics side: unpool the row from the incrementally pooled block.
            const auto block = nplbm::pool_by_cluster(nplbm::row_item_stats(shard.data, w), z, de);
            auto cluster = block[static_cast<std::size_t>(kk)][static_cast<std::size_t>(ll)];
            const auto row_stats = nplbm::row_item_stats(shard.data, w)[i][static_cast<std::size_t>(ll)];
            if (z.label(i) == kk) cluster = nplbm::unpool(cluster, row_stats);
            const double from_stats = nplbm::log_predictive(prior, cluster, row_stats);
            worst_pred = std::max(worst_pred, testing_support::rel_diff(from_raw, from_stats));
            ++preds_checked;
          }
        }
      }
      first += shard.data.rows();
    }

    // Master: pooled stats after every join, then the column-level predictives.
    auto state = nplbm::GlobalRowState::empty(n, p, static_cast<Eigen::Index>(d));
    for (const auto& shard : shards) {
      state = nplbm::join(std::move(state), nplbm::summarize(shard), {}, prior, rng);
      std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(state.num_clusters()));
      std::size_t offset = 0;
      for (const auto& [worker, labels] : state.local_labels) {
        for (std::size_t r = 0; r < labels.size(); ++r)
          members[static_cast<std::size_t>(
                      state.assignment.at({worker, static_cast<std::size_t>(labels[r])}))]
              .push_back(offset + r);
        offset += labels.size();
      }
      for (std::size_t kk = 0; kk < members.size(); ++kk) {
        for (std::size_t j = 0; j < p; ++j) {
          const auto direct = oracle::direct_stats(cells_of(x, members[kk], {j}), static_cast<Eigen::Index>(d));
          worst_stats = std::max(worst_stats, testing_support::stats_diff(state.column_stats[kk][j], direct));
          ++stats_checked;
        }
      }
      if (!state.complete()) continue;
      const auto blocks = nplbm::column_block_table(state, w);
      for (std::size_t kk = 0; kk < members.size(); ++kk) {
        for (int ll = 0; ll < w.num_clusters(); ++ll) {
          std::vector<std::size_t> cols;
          for (std::size_t j = 0; j < p; ++j)
            if (w.label(j) == ll) cols.push_back(j);
          const auto direct = oracle::direct_stats(cells_of(x, members[kk], cols), static_cast<Eigen::Index>(d));
          worst_stats = std::max(worst_stats,
                                 testing_support::stats_diff(blocks[kk][static_cast<std::size_t>(ll)], direct));
          ++stats_checked;
          for (std::size_t j : cols) {
            std::vector<std::size_t> rest;
            for (std::size_t c : cols)
              if (c != j) rest.push_back(c);
            if (rest.empty()) continue;
            const auto de = static_cast<Eigen::Index>(d);
            const auto cluster_cells = cells_of(x, members[kk], rest);
            const auto column_cells = cells_of(x, members[kk], {j});
            const double from_raw = oracle::explicit_log_predictive(
                prior, oracle::direct_stats(cluster_cells, de), direct, column_cells.size());
            const auto cluster = nplbm::unpool(blocks[kk][static_cast<std::size_t>(ll)], state.column_stats[kk][j]);
            const double from_stats = nplbm::log_predictive(prior, cluster, state.column_stats[kk][j]);
            worst_pred = std::max(worst_pred, testing_support::rel_diff(from_raw, from_stats));
            ++preds_checked;
          }
        }
      }
    }
  }
  std::ostringstream s;
  s << stats_checked << " pooled stats (worst rel " << worst_stats << "), " << preds_checked
    << " predictives (worst rel " << worst_pred << ")";
  return {worst_stats <= 1e-8 && worst_pred <= 1e-8 && preds_checked > 0, s.str()};
}

// ------------------------------------------------------------------------ 4

Verdict toy_posterior() {
  const auto t = Clock::now();
  const auto rows = toy::row_sweeps(200000, 41);
  const auto cols = toy::column_sweeps(200000, 42);
  const auto master = toy::master_column_sweeps(200000, 43);
  const double secs = seconds_since(t);
  std::ostringstream s;
  s << "TV rows " << rows.tv << ", columns " << cols.tv << ", master columns " << master.tv << " over "
    << rows.exact.size() << " partitions; " << secs << " s";
  return {rows.tv < 0.02 && cols.tv < 0.02 && master.tv < 0.02 && rows.exact.size() == 5 &&
              cols.exact.size() == 5 && secs <= 120.0,
          s.str()};
}

// ------------------------------------------------------------------------ 5

Verdict conjugacy() {
  using testing_support::random_points;
  using testing_support::random_prior;
  std::mt19937_64 gen(77);
  std::uniform_int_distribution<std::size_t> big(0, 1000), small(0, 40);
  double worst_assoc = 0.0, worst_post = 0.0, worst_chain = 0.0;
  bool finite = true;
  const int trials = 10000;
  for (int trial = 0; trial < trials; ++trial) {
    const Eigen::Index d = 1 + trial % 3;
    const auto a = nplbm::stats_from_points(random_points(gen, big(gen), d), d);
    const auto b = nplbm::stats_from_points(random_points(gen, big(gen), d), d);
    const auto c = nplbm::stats_from_points(random_points(gen, big(gen), d), d);
    const SuffStats abc[] = {a, b, c};
    worst_assoc = std::max(worst_assoc, testing_support::stats_diff(nplbm::pool(nplbm::pool(a, b), c), nplbm::pool(abc)));
  }
  for (int trial = 0; trial < trials; ++trial) {
    const Eigen::Index d = 1 + trial % 3;
    const auto prior = random_prior(gen, d);
    const auto a = nplbm::stats_from_points(random_points(gen, small(gen), d), d);
    const auto b = nplbm::stats_from_points(random_points(gen, small(gen), d), d);
    worst_post = std::max(worst_post, testing_support::params_diff(nplbm::posterior(nplbm::posterior(prior, a), b),
                                                                   nplbm::posterior(prior, nplbm::pool(a, b))));
  }
  for (int trial = 0; trial < trials; ++trial) {
    const Eigen::Index d = 1 + trial % 3;
    const auto prior = random_prior(gen, d);
    const auto a = nplbm::stats_from_points(random_points(gen, small(gen), d), d);
    const auto b = nplbm::stats_from_points(random_points(gen, small(gen), d), d);
    const double joint = nplbm::log_marginal(prior, nplbm::pool(a, b));
    const double chained = nplbm::log_marginal(prior, a) + nplbm::log_predictive(prior, a, b);
    finite = finite && std::isfinite(joint) && std::isfinite(chained);
    worst_chain = std::max(worst_chain, testing_support::rel_diff(joint, chained));
  }
  std::ostringstream s;
  s << trials << " trials each; worst rel: associativity " << worst_assoc << " (tol 1e-8), posterior "
    << worst_post << " (tol 1e-9), chain rule " << worst_chain << " (tol 1e-8)";
  return {worst_assoc <= 1e-8 && worst_post <= 1e-9 && worst_chain <= 1e-8 && finite, s.str()};
}

// ------------------------------------------------------------------------ 6

Verdict scalability() {
  const int iterations = 10;
  const auto data = nplbm::generate(nplbm::SyntheticSpec::separated_grid(20000, 20, 1, 10, 3, 6));
  const auto prior = nplbm::empirical_prior(data.matrix);
  std::vector<double> medians;
  for (int workers : {1, 2, 4}) {
    std::vector<double> times;
    for (int run = 0; run < 3; ++run) {
      InferenceConfig config;
      config.iterations = iterations;
      config.workers = workers;
      config.seed = static_cast<std::uint64_t>(run);
      const auto t = Clock::now();
      nplbm::fit_distributed(data.matrix, config, prior);
      times.push_back(seconds_since(t) * 1000.0);
    }
    std::sort(times.begin(), times.end());
    medians.push_back(times[1]);
  }
  const bool decreasing = medians[0] > medians[1] && medians[1] > medians[2];
  const unsigned cores = std::thread::hardware_concurrency();
  std::ostringstream s;
  s << "median ms over 3 runs, " << iterations << " iterations, workers 1/2/4: " << medians[0] << " / "
    << medians[1] << " / " << medians[2] << "; " << cores << " hardware threads";
  Verdict v{decreasing, s.str(), cores >= 4};
  if (!v.applicable)
    v.detail += " (criterion requires >= 4 cores; with fewer, the ordering reflects scheduling noise "
                "rather than parallel speedup, so it does not gate the exit status)";
  return v;
}

// ------------------------------------------------------------------------ 7

Verdict metric_oracles() {
  std::mt19937_64 gen(7);
  double worst_ari = 0.0, worst_nmi = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + gen() % 200;
    const unsigned ka = 1 + static_cast<unsigned>(gen() % 12), kb = 1 + static_cast<unsigned>(gen() % 12);
    std::vector<int> a(n), b(n);
    for (auto& v : a) v = static_cast<int>(gen() % ka);
    for (auto& v : b) v = static_cast<int>(gen() % kb);
    if (trial % 10 == 0) b = a;  // include identical labelings
    worst_ari = std::max(worst_ari, std::abs(nplbm::ari(a, b) - oracle::pair_counting_ari(a, b)));
    worst_nmi = std::max(worst_nmi, std::abs(nplbm::nmi(a, b) - oracle::entropy_nmi(a, b)));
  }
  std::ostringstream s;
  s << "1000 label pairs; worst abs diff ARI " << worst_ari << ", NMI " << worst_nmi;
  return {worst_ari <= 1e-10 && worst_nmi <= 1e-10, s.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"perfect recovery on separated blocks", perfect_recovery},
      {"single-worker join is the initialization branch", single_worker_join},
      {"statistics-only pooling and predictives", statistics_only},
      {"toy posterior matches enumeration", toy_posterior},
      {"conjugacy identities", conjugacy},
      {"scalability trend", scalability},
      {"metric oracles", metric_oracles},
  };
  int gating_failures = 0;
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    Verdict v;
    try {
      v = criteria[c].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass && v.applicable) ++gating_failures;
    std::printf("criterion %zu %s: %s [%s]\n", c + 1, v.pass ? "PASS" : "FAIL", criteria[c].first,
                v.detail.c_str());
    std::fflush(stdout);
  }
  return gating_failures == 0 ? 0 : 1;
}
