#pragma once

// Cluster-membership bookkeeping, sampler configuration, seeded random streams
// and log-space categorical draws.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nplbm {

struct InferenceConfig {
  double alpha = 1.0;  // row concentration
  double beta = 1.0;   // column concentration
  int iterations = 100;
  std::uint64_t seed = 0;
  int workers = 1;
  bool deterministic = true;  // join summaries in worker-id order

  void validate() const {
    if (!(alpha > 0.0)) throw std::invalid_argument("config: alpha must be > 0");
    if (!(beta > 0.0)) throw std::invalid_argument("config: beta must be > 0");
    if (iterations < 0) throw std::invalid_argument("config: iterations must be >= 0");
    if (workers < 1) throw std::invalid_argument("config: workers must be >= 1");
  }
};

/// mt19937_64 whose seed is a splitmix64 mix of (seed, stream, iteration), so
/// every worker and iteration gets an independent reproducible stream.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) : engine_(mix(seed)) {}

  static Rng derive(std::uint64_t seed, std::uint64_t stream, std::uint64_t iteration) {
    std::uint64_t h = mix(seed);
    h = mix(h ^ (stream + 0x9e3779b97f4a7c15ULL));
    h = mix(h ^ (iteration + 0xbf58476d1ce4e5b9ULL));
    return Rng(h);
  }

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::mt19937_64 engine_;
};

/// Draws k with probability exp(lw[k] - logsumexp(lw)).
inline std::size_t sample_categorical_log(std::span<const double> log_weights, Rng& rng) {
  double top = -std::numeric_limits<double>::infinity();
  for (double w : log_weights) {
    if (std::isnan(w)) throw std::invalid_argument("sample_categorical_log: NaN weight");
    top = std::max(top, w);
  }
  if (!std::isfinite(top)) {
    throw std::invalid_argument("sample_categorical_log: no finite log weight");
  }
  thread_local std::vector<double> cumulative;
  cumulative.resize(log_weights.size());
  double total = 0.0;
  for (std::size_t k = 0; k < log_weights.size(); ++k) {
    total += std::exp(log_weights[k] - top);
    cumulative[k] = total;
  }
  const double u = rng.uniform01() * total;
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  if (it == cumulative.end()) return log_weights.size() - 1;
  return static_cast<std::size_t>(it - cumulative.begin());
}

/// Labels of n items over K dense clusters, with per-cluster sizes.
/// An item removed with `remove` is detached (label `kDetached`) until `assign`.
class Membership {
 public:
  static constexpr int kDetached = -1;

  Membership() = default;

  /// Every item in cluster 0.
  static Membership single_cluster(std::size_t n) {
    Membership m;
    m.labels_.assign(n, 0);
    if (n > 0) m.sizes_.assign(1, n);
    return m;
  }

  /// Adopts `labels`; they must already be dense in [0, K) with no empty cluster.
  static Membership from_labels(std::vector<int> labels) {
    Membership m;
    int top = -1;
    for (int l : labels) {
      if (l < 0) throw std::invalid_argument("Membership: negative label");
      top = std::max(top, l);
    }
    m.sizes_.assign(static_cast<std::size_t>(top + 1), 0);
    for (int l : labels) ++m.sizes_[static_cast<std::size_t>(l)];
    for (std::size_t k = 0; k < m.sizes_.size(); ++k) {
      if (m.sizes_[k] == 0)
        throw std::invalid_argument("Membership: label " + std::to_string(k) + " is unused");
    }
    m.labels_ = std::move(labels);
    return m;
  }

  std::size_t size() const noexcept { return labels_.size(); }
  int num_clusters() const noexcept { return static_cast<int>(sizes_.size()); }
  int label(std::size_t i) const { return labels_.at(i); }
  std::size_t cluster_size(int k) const { return sizes_.at(static_cast<std::size_t>(k)); }
  const std::vector<int>& labels() const noexcept { return labels_; }
  const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }

  struct Removal {
    int cluster;    // cluster the item left, before compaction
    bool vanished;  // that cluster emptied and was deleted
  };

  /// Detaches item i. An emptied cluster is deleted and higher labels shift down.
  Removal remove(std::size_t i) {
    const int k = labels_.at(i);
    if (k == kDetached) throw std::logic_error("Membership::remove: item already detached");
    labels_[i] = kDetached;
    auto& size = sizes_[static_cast<std::size_t>(k)];
    --size;
    if (size > 0) return {k, false};
    sizes_.erase(sizes_.begin() + k);
    for (int& l : labels_) {
      if (l > k) --l;
    }
    return {k, true};
  }

  /// Attaches detached item i to cluster k; k == num_clusters() opens a new one.
  void assign(std::size_t i, int k) {
    if (labels_.at(i) != kDetached) throw std::logic_error("Membership::assign: item not detached");
    if (k < 0 || k > num_clusters()) throw std::out_of_range("Membership::assign: bad cluster");
    if (k == num_clusters()) sizes_.push_back(0);
    ++sizes_[static_cast<std::size_t>(k)];
    labels_[i] = k;
  }

  /// Throws std::logic_error when any invariant is broken.
  void validate() const {
    std::vector<std::size_t> counted(sizes_.size(), 0);
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      const int l = labels_[i];
      if (l < 0 || l >= num_clusters())
        throw std::logic_error("Membership: item " + std::to_string(i) + " has label out of range");
      ++counted[static_cast<std::size_t>(l)];
    }
    for (std::size_t k = 0; k < sizes_.size(); ++k) {
      if (sizes_[k] == 0) throw std::logic_error("Membership: empty cluster " + std::to_string(k));
      if (counted[k] != sizes_[k])
        throw std::logic_error("Membership: size of cluster " + std::to_string(k) + " is stale");
    }
  }

  friend bool operator==(const Membership&, const Membership&) = default;

 private:
  std::vector<int> labels_;
  std::vector<std::size_t> sizes_;
};

/// Sum over clusters of the CRP log-prior: K log(c) + sum log Gamma(n_k) + log Gamma(c) - log Gamma(c + n).
inline double crp_log_prior(const Membership& m, double concentration) {
  const double n = static_cast<double>(m.size());
  double out = m.num_clusters() * std::log(concentration) + std::lgamma(concentration) -
               std::lgamma(concentration + n);
  for (std::size_t s : m.sizes()) out += std::lgamma(static_cast<double>(s));
  return out;
}

}  // namespace nplbm
