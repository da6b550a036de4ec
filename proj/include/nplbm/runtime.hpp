#pragma once

// One distributed fit: shards sweep in parallel, the master folds their
// summaries as they arrive, then samples the column partition and broadcasts
// it for the next iteration.

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "nplbm/data_matrix.hpp"
#include "nplbm/fit_result.hpp"
#include "nplbm/gibbs.hpp"
#include "nplbm/master.hpp"
#include "nplbm/niw.hpp"
#include "nplbm/partition.hpp"
#include "nplbm/serialize.hpp"
#include "nplbm/worker.hpp"

namespace nplbm {

class WorkerFailure : public std::runtime_error {
 public:
  WorkerFailure(std::uint32_t worker_id, const std::string& what)
      : std::runtime_error("worker " + std::to_string(worker_id) + " failed: " + what),
        worker_id_(worker_id) {}
  std::uint32_t worker_id() const noexcept { return worker_id_; }

 private:
  std::uint32_t worker_id_;
};

/// Many-producer / single-consumer mailbox.
template <typename T>
class Mailbox {
 public:
  void push(T value) {
    {
      std::lock_guard lock(mutex_);
      items_.push_back(std::move(value));
    }
    ready_.notify_one();
  }

  T pop() {
    std::unique_lock lock(mutex_);
    ready_.wait(lock, [this] { return !items_.empty(); });
    T value = std::move(items_.front());
    items_.pop_front();
    return value;
  }

 private:
  std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<T> items_;
};

namespace detail {

struct WorkerMessage {
  std::uint32_t worker_id = 0;
  std::vector<std::byte> payload;  // serialized WorkerSummary
  std::optional<std::string> error;
};

}  // namespace detail

inline FitResult fit_distributed(const DataMatrix& x, const InferenceConfig& config,
                                 const NiwParams& prior) {
  using Clock = std::chrono::steady_clock;
  config.validate();
  prior.validate();
  if (static_cast<std::size_t>(prior.dim()) != x.dim())
    throw std::invalid_argument("fit_distributed: prior dimension != cell dimension");
  const auto start = Clock::now();

  std::vector<WorkerShard> shards = make_shards(x, config.workers);
  std::vector<std::size_t> shard_rows;
  for (const auto& s : shards) shard_rows.push_back(s.data.rows());

  Membership columns = Membership::single_cluster(x.cols());
  std::vector<int> row_labels(x.rows(), 0);
  int row_clusters = x.rows() > 0 ? 1 : 0;

  FitResult result;
  result.config = config;
  result.mode = "distributed";

  for (int it = 0; it < config.iterations; ++it) {
    const auto iteration_start = Clock::now();
    const auto iteration = static_cast<std::uint64_t>(it);
    const auto broadcast = std::make_shared<const Membership>(columns);
    Mailbox<detail::WorkerMessage> mailbox;

    std::vector<std::jthread> threads;
    threads.reserve(shards.size());
    for (auto& shard : shards) {
      threads.emplace_back([&shard, &mailbox, broadcast, &config, &prior, iteration] {
        detail::WorkerMessage message;
        message.worker_id = shard.worker_id;
        try {
          Rng rng = Rng::derive(config.seed, shard.worker_id, iteration);
          local_row_sweep(shard, *broadcast, config, prior, rng);
          message.payload = serialize_summary(summarize(shard));
        } catch (const std::exception& e) {
          message.error = e.what();
        }
        mailbox.push(std::move(message));
      });
    }

    Rng master_rng = Rng::derive(config.seed, kMasterStream, iteration);
    GlobalRowState state =
        GlobalRowState::empty(x.rows(), x.cols(), static_cast<Eigen::Index>(x.dim()));
    std::map<std::uint32_t, WorkerSummary> held;  // deterministic mode: out-of-order arrivals
    std::uint32_t next_worker = 0;
    std::optional<WorkerFailure> failure;
    for (std::size_t received = 0; received < shards.size(); ++received) {
      detail::WorkerMessage message = mailbox.pop();
      if (failure) continue;  // drain remaining workers before reporting
      if (message.error) {
        failure.emplace(message.worker_id, *message.error);
        continue;
      }
      WorkerSummary summary = deserialize_summary(message.payload);
      if (!config.deterministic) {
        state = join(std::move(state), summary, config, prior, master_rng);
        continue;
      }
      held.emplace(summary.worker_id, std::move(summary));
      for (auto found = held.find(next_worker); found != held.end();
           found = held.find(next_worker)) {
        state = join(std::move(state), found->second, config, prior, master_rng);
        held.erase(found);
        ++next_worker;
      }
    }
    threads.clear();
    if (failure) throw *failure;

    row_labels = global_labels(state, shard_rows);
    row_clusters = state.num_clusters();
    columns = column_sweep_master(state, columns, config, prior, master_rng);

    const Membership rows = Membership::from_labels(row_labels);
    TraceRecord record;
    record.iteration = it + 1;
    record.row_clusters = row_clusters;
    record.column_clusters = columns.num_clusters();
    record.log_posterior =
        log_posterior_proxy(column_block_table(state, columns), rows, columns, config, prior);
    record.wall_ms =
        std::chrono::duration<double, std::milli>(Clock::now() - iteration_start).count();
    result.trace.push_back(record);
  }

  result.row_labels = std::move(row_labels);
  result.column_labels = columns.labels();
  result.row_clusters = row_clusters;
  result.column_clusters = columns.num_clusters();
  result.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  return result;
}

}  // namespace nplbm
