#pragma once

// Conjugate Gaussian algebra: sufficient statistics, Normal-Inverse-Wishart
// updates and the marginal / predictive densities every sampler scores with.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <ranges>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace nplbm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when a scale matrix that must be positive-definite is not.
/// `pivot()` is the smallest LDLT pivot found, useful to tell drift from garbage.
class NotPositiveDefinite : public std::runtime_error {
 public:
  explicit NotPositiveDefinite(double pivot)
      : std::runtime_error("scale matrix is not positive-definite (smallest pivot " +
                           std::to_string(pivot) + ")"),
        pivot_(pivot) {}
  double pivot() const noexcept { return pivot_; }

 private:
  double pivot_;
};

/// (count, mean, centered scatter) of a set of d-dimensional points.
/// An empty set has zero mean and zero scatter and acts as the identity of `pool`.
struct SuffStats {
  std::size_t count = 0;
  Vector mean;
  Matrix scatter;

  SuffStats() = default;
  SuffStats(std::size_t n, Vector m, Matrix s)
      : count(n), mean(std::move(m)), scatter(std::move(s)) {}

  static SuffStats empty(Eigen::Index dim) {
    return {0, Vector::Zero(dim), Matrix::Zero(dim, dim)};
  }

  Eigen::Index dim() const noexcept { return mean.size(); }
  bool is_empty() const noexcept { return count == 0; }
};

inline void symmetrize(Matrix& m) { m = (0.5 * (m + m.transpose())).eval(); }

namespace detail {

inline void require_same_dim(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

}  // namespace detail

/// Two-pass mean and scatter over a range of d-vectors (anything convertible
/// to an Eigen vector expression, e.g. Vector or Eigen::Map of a cell).
template <std::ranges::forward_range Points>
SuffStats stats_from_points(const Points& points, Eigen::Index dim) {
  SuffStats out = SuffStats::empty(dim);
  std::size_t index = 0;
  for (const auto& x : points) {
    if (x.size() != dim) {
      throw std::invalid_argument("stats_from_points: point " + std::to_string(index) +
                                  " has dimension " + std::to_string(x.size()) +
                                  ", expected " + std::to_string(dim));
    }
    out.mean += x;
    ++index;
  }
  if (index == 0) return out;
  out.count = index;
  out.mean /= static_cast<double>(index);
  for (const auto& x : points) {
    const Vector centered = x - out.mean;
    out.scatter.noalias() += centered * centered.transpose();
  }
  symmetrize(out.scatter);
  return out;
}

/// Exact merge of disjoint summaries:
///   n = sum n_h,  T = (1/n) sum n_h T_h,
///   S = sum S_h + sum n_h T_h T_h' - n T T'.
inline SuffStats pool(std::span<const SuffStats> parts) {
  if (parts.empty()) throw std::invalid_argument("pool: no parts (dimension unknown)");
  const Eigen::Index dim = parts.front().dim();
  SuffStats out = SuffStats::empty(dim);
  Vector weighted_sum = Vector::Zero(dim);
  Matrix second_moment = Matrix::Zero(dim, dim);
  for (const auto& part : parts) {
    detail::require_same_dim(part.dim(), dim, "pool");
    if (part.is_empty()) continue;
    const double nh = static_cast<double>(part.count);
    out.count += part.count;
    weighted_sum += nh * part.mean;
    out.scatter += part.scatter;
    second_moment.noalias() += nh * part.mean * part.mean.transpose();
  }
  if (out.count == 0) return out;
  const double n = static_cast<double>(out.count);
  out.mean = weighted_sum / n;
  out.scatter += second_moment;
  out.scatter.noalias() -= n * out.mean * out.mean.transpose();
  symmetrize(out.scatter);
  return out;
}

inline SuffStats pool(const SuffStats& a, const SuffStats& b) {
  detail::require_same_dim(a.dim(), b.dim(), "pool");
  if (b.is_empty()) return a;
  if (a.is_empty()) return b;
  const SuffStats parts[] = {a, b};
  return pool(parts);
}

/// Inverse of `pool(total_without_part, part)`. `part` must be a subset of `total`.
inline SuffStats unpool(const SuffStats& total, const SuffStats& part) {
  detail::require_same_dim(total.dim(), part.dim(), "unpool");
  if (part.is_empty()) return total;
  if (part.count > total.count) throw std::invalid_argument("unpool: part larger than total");
  if (part.count == total.count) return SuffStats::empty(total.dim());
  const double n = static_cast<double>(total.count);
  const double m = static_cast<double>(part.count);
  const double rest = n - m;
  SuffStats out;
  out.count = total.count - part.count;
  out.mean = (n * total.mean - m * part.mean) / rest;
  out.scatter = total.scatter - part.scatter;
  out.scatter.noalias() += n * total.mean * total.mean.transpose();
  out.scatter.noalias() -= m * part.mean * part.mean.transpose();
  out.scatter.noalias() -= rest * out.mean * out.mean.transpose();
  symmetrize(out.scatter);
  return out;
}

/// Normal-Inverse-Wishart hyper-parameters (mu, kappa, Psi, nu).
struct NiwParams {
  Vector mu;
  double kappa = 1.0;
  Matrix psi;
  double nu = 2.0;

  Eigen::Index dim() const noexcept { return mu.size(); }

  void validate() const {
    const auto d = dim();
    if (d < 1) throw std::invalid_argument("NiwParams: dimension must be >= 1");
    if (psi.rows() != d || psi.cols() != d)
      throw std::invalid_argument("NiwParams: psi must be d x d");
    if (!(kappa > 0.0)) throw std::invalid_argument("NiwParams: kappa must be > 0");
    if (!(nu > static_cast<double>(d) - 1.0))
      throw std::invalid_argument("NiwParams: nu must exceed d - 1");
    if ((psi - psi.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + psi.cwiseAbs().maxCoeff()))
      throw std::invalid_argument("NiwParams: psi must be symmetric");
    Eigen::LLT<Matrix> llt(psi);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument("NiwParams: psi must be positive-definite");
  }
};

inline NiwParams posterior(const NiwParams& prior, const SuffStats& stats) {
  detail::require_same_dim(prior.dim(), stats.dim(), "posterior");
  if (stats.is_empty()) return prior;
  const double n = static_cast<double>(stats.count);
  NiwParams out;
  out.kappa = prior.kappa + n;
  out.nu = prior.nu + n;
  out.mu = (prior.kappa * prior.mu + n * stats.mean) / out.kappa;
  const Vector diff = prior.mu - stats.mean;
  out.psi = prior.psi + stats.scatter;
  out.psi.noalias() += (prior.kappa * n / out.kappa) * diff * diff.transpose();
  symmetrize(out.psi);
  return out;
}

/// log Gamma_d(x) = d(d-1)/4 log(pi) + sum_{i=1..d} lgamma(x + (1 - i)/2).
inline double multivariate_log_gamma(int d, double x) {
  if (d < 1) throw std::invalid_argument("multivariate_log_gamma: d must be >= 1");
  if (!(x > 0.5 * (d - 1)))
    throw std::domain_error("multivariate_log_gamma: x must exceed (d - 1) / 2");
  double out = 0.25 * d * (d - 1) * std::log(std::numbers::pi);
  for (int i = 1; i <= d; ++i) out += std::lgamma(x + 0.5 * (1 - i));
  return out;
}

/// log |A| for symmetric positive-definite A via the Cholesky diagonal.
inline double log_det_spd(const Matrix& a) {
  if (a.rows() == 1) {
    const double v = a(0, 0);
    if (!(v > 0.0)) throw NotPositiveDefinite(v);
    return std::log(v);
  }
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    Eigen::LDLT<Matrix> ldlt(a);
    throw NotPositiveDefinite(ldlt.vectorD().minCoeff());
  }
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

/// Log of the NIW normalizer up to the terms that cancel in every ratio:
///   log Gamma_d(nu/2) - (nu/2) log|Psi| - (d/2) log kappa.
inline double log_normalizer(const NiwParams& p) {
  const auto d = static_cast<int>(p.dim());
  return multivariate_log_gamma(d, 0.5 * p.nu) - 0.5 * p.nu * log_det_spd(p.psi) -
         0.5 * d * std::log(p.kappa);
}

/// NIW parameters together with their log-normalizer, so that a prior (or a
/// cluster posterior that is scored against many candidates) pays the
/// determinant and gamma terms once.
class ConditionedNiw {
 public:
  explicit ConditionedNiw(NiwParams params)
      : params_(std::move(params)), log_norm_(log_normalizer(params_)) {}
  ConditionedNiw(const NiwParams& prior, const SuffStats& stats)
      : ConditionedNiw(posterior(prior, stats)) {}

  const NiwParams& params() const noexcept { return params_; }
  double log_norm() const noexcept { return log_norm_; }

  /// log p(candidate | these parameters):
  ///   -n d/2 log(pi) + log Z(posterior(params, candidate)) - log Z(params).
  double log_marginal(const SuffStats& candidate) const {
    if (candidate.is_empty()) return 0.0;
    const double n = static_cast<double>(candidate.count);
    const double d = static_cast<double>(params_.dim());
    return -0.5 * n * d * std::log(std::numbers::pi) +
           log_normalizer(posterior(params_, candidate)) - log_norm_;
  }

 private:
  NiwParams params_;
  double log_norm_;
};

/// log p(X | G0) from the sufficient statistics of X alone.
inline double log_marginal(const NiwParams& prior, const SuffStats& stats) {
  detail::require_same_dim(prior.dim(), stats.dim(), "log_marginal");
  if (stats.is_empty()) return 0.0;
  return ConditionedNiw(prior).log_marginal(stats);
}

/// log p(candidate | cluster, G0) = log_marginal(posterior(prior, cluster), candidate).
inline double log_predictive(const NiwParams& prior, const SuffStats& cluster,
                             const SuffStats& candidate) {
  detail::require_same_dim(prior.dim(), cluster.dim(), "log_predictive");
  detail::require_same_dim(prior.dim(), candidate.dim(), "log_predictive");
  if (candidate.is_empty()) return 0.0;
  return ConditionedNiw(prior, cluster).log_marginal(candidate);
}

}  // namespace nplbm
