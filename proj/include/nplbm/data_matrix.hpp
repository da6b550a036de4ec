#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace nplbm {

/// n x p grid of d-dimensional real cells, stored row-major (row, column, component).
class DataMatrix {
 public:
  using Cell = Eigen::Map<const Eigen::VectorXd>;

  DataMatrix() = default;
  DataMatrix(std::size_t rows, std::size_t cols, std::size_t dim)
      : rows_(rows), cols_(cols), dim_(dim), values_(rows * cols * dim, 0.0) {
    if (dim == 0) throw std::invalid_argument("DataMatrix: cell dimension must be >= 1");
  }
  DataMatrix(std::size_t rows, std::size_t cols, std::size_t dim, std::vector<double> values)
      : rows_(rows), cols_(cols), dim_(dim), values_(std::move(values)) {
    if (dim == 0) throw std::invalid_argument("DataMatrix: cell dimension must be >= 1");
    if (values_.size() != rows * cols * dim)
      throw std::invalid_argument("DataMatrix: expected " + std::to_string(rows * cols * dim) +
                                  " values, got " + std::to_string(values_.size()));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<double>& values() const noexcept { return values_; }

  Cell cell(std::size_t i, std::size_t j) const {
    return Cell(values_.data() + offset(i, j), static_cast<Eigen::Index>(dim_));
  }
  Eigen::Map<Eigen::VectorXd> cell(std::size_t i, std::size_t j) {
    return {values_.data() + offset(i, j), static_cast<Eigen::Index>(dim_)};
  }

  /// Rows [first, first + count) as a new matrix.
  DataMatrix row_range(std::size_t first, std::size_t count) const {
    if (first + count > rows_) throw std::out_of_range("DataMatrix::row_range");
    const auto begin = values_.begin() + static_cast<std::ptrdiff_t>(offset(first, 0));
    const auto end = begin + static_cast<std::ptrdiff_t>(count * cols_ * dim_);
    return {count, cols_, dim_, std::vector<double>(begin, end)};
  }

  DataMatrix transposed() const {
    DataMatrix out(cols_, rows_, dim_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) out.cell(j, i) = cell(i, j);
    return out;
  }

  friend bool operator==(const DataMatrix&, const DataMatrix&) = default;

 private:
  std::size_t offset(std::size_t i, std::size_t j) const noexcept {
    return (i * cols_ + j) * dim_;
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t dim_ = 1;
  std::vector<double> values_;
};

}  // namespace nplbm
