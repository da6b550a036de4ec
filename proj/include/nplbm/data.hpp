#pragma once

// Synthetic block data, CSV I/O, clustering agreement metrics and the
// empirical NIW prior.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "nplbm/data_matrix.hpp"
#include "nplbm/niw.hpp"
#include "nplbm/partition.hpp"

namespace nplbm {

struct SyntheticSpec {
  std::size_t n = 0;
  std::size_t p = 0;
  std::size_t d = 1;
  std::size_t row_clusters = 1;     // K
  std::size_t column_clusters = 1;  // L
  std::vector<std::vector<Vector>> block_means;  // [k][l]
  std::vector<std::vector<Matrix>> block_covs;   // [k][l]
  std::vector<double> row_proportions;           // empty means uniform
  std::vector<double> column_proportions;
  std::uint64_t seed = 0;

  /// Block (k, l) centred at 5 (L k + l) in every component with unit covariance,
  /// so neighbouring blocks are five standard deviations apart.
  static SyntheticSpec separated_grid(std::size_t n, std::size_t p, std::size_t d, std::size_t k,
                                      std::size_t l, std::uint64_t seed) {
    SyntheticSpec s;
    s.n = n;
    s.p = p;
    s.d = d;
    s.row_clusters = k;
    s.column_clusters = l;
    s.seed = seed;
    const auto dim = static_cast<Eigen::Index>(d);
    s.block_means.assign(k, std::vector<Vector>(l));
    s.block_covs.assign(k, std::vector<Matrix>(l, Matrix::Identity(dim, dim)));
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < l; ++b)
        s.block_means[a][b] = Vector::Constant(dim, 5.0 * static_cast<double>(l * a + b));
    return s;
  }

  void validate() const {
    if (n == 0 || p == 0 || d == 0) throw std::invalid_argument("SyntheticSpec: n, p, d must be >= 1");
    if (row_clusters == 0 || column_clusters == 0)
      throw std::invalid_argument("SyntheticSpec: K and L must be >= 1");
    if (block_means.size() != row_clusters || block_covs.size() != row_clusters)
      throw std::invalid_argument("SyntheticSpec: block grids must have K rows");
    const auto dim = static_cast<Eigen::Index>(d);
    for (std::size_t a = 0; a < row_clusters; ++a) {
      if (block_means[a].size() != column_clusters || block_covs[a].size() != column_clusters)
        throw std::invalid_argument("SyntheticSpec: block grids must have L columns");
      for (std::size_t b = 0; b < column_clusters; ++b) {
        if (block_means[a][b].size() != dim) throw std::invalid_argument("SyntheticSpec: mean size");
        const Matrix& c = block_covs[a][b];
        if (c.rows() != dim || c.cols() != dim) throw std::invalid_argument("SyntheticSpec: cov size");
        if (Eigen::LLT<Matrix>(c).info() != Eigen::Success)
          throw std::invalid_argument("SyntheticSpec: covariance is not SPD");
      }
    }
    const auto check = [](const std::vector<double>& w, std::size_t k, const char* what) {
      if (w.empty()) return;
      if (w.size() != k) throw std::invalid_argument(std::string("SyntheticSpec: ") + what + " size");
      for (double v : w)
        if (!(v >= 0.0)) throw std::invalid_argument(std::string("SyntheticSpec: ") + what + " < 0");
    };
    check(row_proportions, row_clusters, "row proportions");
    check(column_proportions, column_clusters, "column proportions");
  }
};

struct LabeledDataset {
  DataMatrix matrix;
  std::vector<int> row_labels;
  std::vector<int> column_labels;
};

inline LabeledDataset generate(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const auto draw_labels = [&rng](std::size_t count, std::size_t k, const std::vector<double>& w) {
    std::vector<double> weights = w.empty() ? std::vector<double>(k, 1.0) : w;
    std::discrete_distribution<int> pick(weights.begin(), weights.end());
    std::vector<int> out(count);
    for (auto& v : out) v = pick(rng);
    return out;
  };

  LabeledDataset out;
  out.row_labels = draw_labels(spec.n, spec.row_clusters, spec.row_proportions);
  out.column_labels = draw_labels(spec.p, spec.column_clusters, spec.column_proportions);
  out.matrix = DataMatrix(spec.n, spec.p, spec.d);

  std::vector<std::vector<Matrix>> factors(spec.row_clusters);
  for (std::size_t a = 0; a < spec.row_clusters; ++a)
    for (const auto& c : spec.block_covs[a]) factors[a].push_back(Eigen::LLT<Matrix>(c).matrixL());

  std::normal_distribution<double> normal(0.0, 1.0);
  Vector noise(static_cast<Eigen::Index>(spec.d));
  for (std::size_t i = 0; i < spec.n; ++i) {
    const auto k = static_cast<std::size_t>(out.row_labels[i]);
    for (std::size_t j = 0; j < spec.p; ++j) {
      const auto l = static_cast<std::size_t>(out.column_labels[j]);
      for (auto& v : noise) v = normal(rng);
      out.matrix.cell(i, j) = spec.block_means[k][l] + factors[k][l] * noise;
    }
  }
  return out;
}

/// mu0 = mean of all n p cells, Psi0 = their (1/N) covariance, kappa0 = 1,
/// nu0 = d + 1. A singular covariance gets 1e-6 * max(trace/d, 1) added on the diagonal.
inline NiwParams empirical_prior(const DataMatrix& x) {
  const auto dim = static_cast<Eigen::Index>(x.dim());
  std::vector<DataMatrix::Cell> cells;
  cells.reserve(x.rows() * x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) cells.push_back(x.cell(i, j));
  const SuffStats all = stats_from_points(cells, dim);
  if (all.is_empty()) throw std::invalid_argument("empirical_prior: empty dataset");

  NiwParams prior;
  prior.mu = all.mean;
  prior.kappa = 1.0;
  prior.nu = static_cast<double>(dim) + 1.0;
  prior.psi = all.scatter / static_cast<double>(all.count);
  if (Eigen::LLT<Matrix>(prior.psi).info() != Eigen::Success ||
      prior.psi.diagonal().minCoeff() <= 0.0) {
    const double scale = std::max(prior.psi.trace() / static_cast<double>(dim), 1.0);
    prior.psi += 1e-6 * scale * Matrix::Identity(dim, dim);
  }
  return prior;
}

// ---------------------------------------------------------------------------
// Agreement metrics

namespace detail {

struct Contingency {
  std::map<std::pair<int, int>, std::size_t> joint;
  std::map<int, std::size_t> left;
  std::map<int, std::size_t> right;
  std::size_t n = 0;
};

inline Contingency contingency(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("label vectors differ in length (" + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()) + ")");
  Contingency c;
  c.n = a.size();
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++c.joint[{a[i], b[i]}];
    ++c.left[a[i]];
    ++c.right[b[i]];
  }
  return c;
}

inline double pairs(std::size_t m) { return 0.5 * static_cast<double>(m) * (static_cast<double>(m) - 1.0); }

}  // namespace detail

/// Hubert-Arabie adjusted Rand index. Degenerate cases where the expected and
/// maximum index coincide (both partitions trivial and equal) return 1.
inline double ari(const std::vector<int>& a, const std::vector<int>& b) {
  const auto c = detail::contingency(a, b);
  double index = 0.0;
  for (const auto& [key, m] : c.joint) index += detail::pairs(m);
  double sum_left = 0.0;
  for (const auto& [key, m] : c.left) sum_left += detail::pairs(m);
  double sum_right = 0.0;
  for (const auto& [key, m] : c.right) sum_right += detail::pairs(m);
  const double total = detail::pairs(c.n);
  const double expected = total > 0.0 ? sum_left * sum_right / total : 0.0;
  const double maximum = 0.5 * (sum_left + sum_right);
  if (maximum == expected) return 1.0;
  return (index - expected) / (maximum - expected);
}

/// Mutual information normalized by the arithmetic mean of the two entropies.
/// Labelings equal up to renaming, including two single-cluster ones, score 1.
inline double nmi(const std::vector<int>& a, const std::vector<int>& b) {
  const auto c = detail::contingency(a, b);
  if (c.n == 0) return 1.0;
  const double n = static_cast<double>(c.n);
  const auto entropy = [n](const std::map<int, std::size_t>& counts) {
    double h = 0.0;
    for (const auto& [key, m] : counts) {
      const double q = static_cast<double>(m) / n;
      h -= q * std::log(q);
    }
    return h;
  };
  // A one-to-one contingency table is a relabeling; summing I and H in
  // different orders would otherwise leave it a few ulps short of 1.
  if (c.joint.size() == c.left.size() && c.joint.size() == c.right.size()) return 1.0;
  const double ha = entropy(c.left);
  const double hb = entropy(c.right);
  double mi = 0.0;
  for (const auto& [key, m] : c.joint) {
    const double nij = static_cast<double>(m);
    mi += nij / n *
          std::log(nij * n /
                   (static_cast<double>(c.left.at(key.first)) * static_cast<double>(c.right.at(key.second))));
  }
  return std::clamp(mi / (0.5 * (ha + hb)), 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// CSV

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                     : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline bool parse_double(std::string_view field, double& out) {
  field = trim(field);
  if (field.empty()) return false;
  if (field.front() == '+') field.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return ec == std::errc() && ptr == field.data() + field.size();
}

inline std::string format_double(double v) {
  char buffer[32];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, v);
  return std::string(buffer, ptr);
}

/// Writes to `path.tmp` then renames over `path`. Special files (devices,
/// pipes) are written in place since renaming over them would replace them.
template <typename Fn>
void write_atomically(const std::filesystem::path& path, Fn&& body) {
  const auto status = std::filesystem::status(path);
  if (std::filesystem::exists(status) && !std::filesystem::is_regular_file(status)) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    body(out);
    return;
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    body(out);
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace detail

/// Header c{j} when d = 1, otherwise c{j}_{a} for component a of cell j.
inline void write_csv(const DataMatrix& x, std::ostream& out) {
  for (std::size_t j = 0; j < x.cols(); ++j) {
    for (std::size_t a = 0; a < x.dim(); ++a) {
      if (j + a > 0) out << ',';
      out << 'c' << j;
      if (x.dim() > 1) out << '_' << a;
    }
  }
  out << '\n';
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const auto cell = x.cell(i, j);
      for (std::size_t a = 0; a < x.dim(); ++a) {
        if (j + a > 0) out << ',';
        out << detail::format_double(cell(static_cast<Eigen::Index>(a)));
      }
    }
    out << '\n';
  }
}

inline void write_csv(const DataMatrix& x, const std::filesystem::path& path) {
  detail::write_atomically(path, [&x](std::ostream& out) { write_csv(x, out); });
}

/// Reads p d numeric fields per line. A first line that is not numeric is a header.
inline DataMatrix read_csv(std::istream& in, std::size_t d) {
  if (d == 0) throw std::invalid_argument("read_csv: d must be >= 1");
  std::vector<double> values;
  std::size_t width = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_fields(line);
    std::vector<double> parsed(fields.size());
    bool numeric = true;
    for (std::size_t f = 0; f < fields.size(); ++f) numeric = numeric && detail::parse_double(fields[f], parsed[f]);
    if (!numeric) {
      if (width == 0 && rows == 0 && line_no == 1) {
        width = fields.size();
        continue;
      }
      throw CsvError("line " + std::to_string(line_no) + ": non-numeric field");
    }
    if (width == 0) width = fields.size();
    if (fields.size() != width)
      throw CsvError("line " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                     " fields, got " + std::to_string(fields.size()));
    values.insert(values.end(), parsed.begin(), parsed.end());
    ++rows;
  }
  if (width % d != 0)
    throw CsvError("column count " + std::to_string(width) + " is not a multiple of d = " +
                   std::to_string(d));
  return {rows, width / d, d, std::move(values)};
}

inline DataMatrix read_csv(const std::filesystem::path& path, std::size_t d) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return read_csv(in, d);
}

/// Single-column CSV with header `label`.
inline void write_labels(const std::vector<int>& labels, std::ostream& out) {
  out << "label\n";
  for (int l : labels) out << l << '\n';
}

inline void write_labels(const std::vector<int>& labels, const std::filesystem::path& path) {
  detail::write_atomically(path, [&labels](std::ostream& out) { write_labels(labels, out); });
}

inline std::vector<int> read_labels(std::istream& in) {
  std::vector<int> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto field = detail::trim(line);
    if (field.empty()) continue;
    int v = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
      if (line_no == 1) continue;
      throw CsvError("line " + std::to_string(line_no) + ": label is not an integer");
    }
    out.push_back(v);
  }
  return out;
}

inline std::vector<int> read_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return read_labels(in);
}

/// Rows sorted by (row label, index), columns by (column label, index).
inline DataMatrix reorder(const DataMatrix& x, const std::vector<int>& rows,
                          const std::vector<int>& columns) {
  if (rows.size() != x.rows() || columns.size() != x.cols())
    throw std::invalid_argument("reorder: label lengths do not match the matrix");
  const auto order = [](const std::vector<int>& labels) {
    std::vector<std::size_t> idx(labels.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&labels](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });
    return idx;
  };
  const auto row_order = order(rows);
  const auto col_order = order(columns);
  DataMatrix out(x.rows(), x.cols(), x.dim());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out.cell(i, j) = x.cell(row_order[i], col_order[j]);
  return out;
}

}  // namespace nplbm
