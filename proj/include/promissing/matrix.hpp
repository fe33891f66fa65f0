#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace promissing {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  void fill(double v);

  Matrix select_rows(std::span<const std::size_t> indices) const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Numeric matrix with an explicit per-cell missingness mask (true = missing).
//
// Missing cells carry no payload: they are stored as NaN and can only be
// read through payload(), which exists for kernels that branch on the mask
// themselves. at() on a missing cell throws MissingCellError.
class MaskedMatrix {
 public:
  MaskedMatrix() = default;
  MaskedMatrix(std::size_t rows, std::size_t cols);
  // Fully observed matrix.
  explicit MaskedMatrix(Matrix values);
  MaskedMatrix(Matrix values, std::vector<std::uint8_t> mask);

  std::size_t rows() const { return values_.rows(); }
  std::size_t cols() const { return values_.cols(); }

  bool is_missing(std::size_t i, std::size_t j) const { return mask_[i * cols() + j] != 0; }
  double at(std::size_t i, std::size_t j) const;
  double payload(std::size_t i, std::size_t j) const { return values_(i, j); }

  void set(std::size_t i, std::size_t j, double v);
  void set_missing(std::size_t i, std::size_t j);

  std::size_t observed_in_row(std::size_t i) const;
  std::size_t missing_in_row(std::size_t i) const { return cols() - observed_in_row(i); }
  std::size_t missing_in_col(std::size_t j) const;
  std::size_t missing_count() const;
  bool complete() const { return missing_count() == 0; }

  std::span<const double> row_payload(std::size_t i) const { return values_.row(i); }
  std::span<const std::uint8_t> row_mask(std::size_t i) const {
    return {mask_.data() + i * cols(), cols()};
  }

  const Matrix& payloads() const { return values_; }
  std::span<const std::uint8_t> mask() const { return mask_; }

  // Observed values of a column, in row order.
  std::vector<double> observed_column(std::size_t j) const;

  MaskedMatrix select_rows(std::span<const std::size_t> indices) const;
  MaskedMatrix select_cols(std::span<const std::size_t> indices) const;

  // Converts to a plain matrix; throws MissingCellError if any cell is missing.
  Matrix to_dense() const;

  // Identical shape, mask, and observed values (missing payloads ignored).
  bool same_observed(const MaskedMatrix& other) const;

 private:
  Matrix values_;
  std::vector<std::uint8_t> mask_;
};

MaskedMatrix hstack(std::span<const MaskedMatrix> blocks);
MaskedMatrix vstack(std::span<const MaskedMatrix> blocks);

}  // namespace promissing
