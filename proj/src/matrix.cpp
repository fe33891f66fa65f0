#include "promissing/matrix.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "promissing/errors.hpp"

namespace promissing {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("matrix data size " + std::to_string(data_.size()) +
                     " does not match " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    auto src = row(indices[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

MaskedMatrix::MaskedMatrix(std::size_t rows, std::size_t cols)
    : values_(rows, cols, 0.0), mask_(rows * cols, 0) {}

MaskedMatrix::MaskedMatrix(Matrix values)
    : values_(std::move(values)), mask_(values_.size(), 0) {}

MaskedMatrix::MaskedMatrix(Matrix values, std::vector<std::uint8_t> mask)
    : values_(std::move(values)), mask_(std::move(mask)) {
  if (mask_.size() != values_.size()) {
    throw ShapeError("mask and values differ in shape");
  }
  auto flat = values_.flat();
  for (std::size_t c = 0; c < mask_.size(); ++c) {
    if (mask_[c]) flat[c] = kNaN;
  }
}

double MaskedMatrix::at(std::size_t i, std::size_t j) const {
  if (is_missing(i, j)) {
    throw MissingCellError("cell (" + std::to_string(i) + ", " + std::to_string(j) +
                           ") is missing");
  }
  return values_(i, j);
}

void MaskedMatrix::set(std::size_t i, std::size_t j, double v) {
  values_(i, j) = v;
  mask_[i * cols() + j] = 0;
}

void MaskedMatrix::set_missing(std::size_t i, std::size_t j) {
  values_(i, j) = kNaN;
  mask_[i * cols() + j] = 1;
}

std::size_t MaskedMatrix::observed_in_row(std::size_t i) const {
  auto m = row_mask(i);
  return static_cast<std::size_t>(std::count(m.begin(), m.end(), 0));
}

std::size_t MaskedMatrix::missing_in_col(std::size_t j) const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < rows(); ++i) n += is_missing(i, j);
  return n;
}

std::size_t MaskedMatrix::missing_count() const {
  return static_cast<std::size_t>(std::count_if(mask_.begin(), mask_.end(),
                                                [](std::uint8_t m) { return m != 0; }));
}

std::vector<double> MaskedMatrix::observed_column(std::size_t j) const {
  std::vector<double> out;
  out.reserve(rows());
  for (std::size_t i = 0; i < rows(); ++i) {
    if (!is_missing(i, j)) out.push_back(values_(i, j));
  }
  return out;
}

MaskedMatrix MaskedMatrix::select_rows(std::span<const std::size_t> indices) const {
  MaskedMatrix out;
  out.values_ = values_.select_rows(indices);
  out.mask_.resize(indices.size() * cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    auto src = row_mask(indices[r]);
    std::copy(src.begin(), src.end(), out.mask_.begin() + r * cols());
  }
  return out;
}

MaskedMatrix MaskedMatrix::select_cols(std::span<const std::size_t> indices) const {
  MaskedMatrix out(rows(), indices.size());
  for (std::size_t i = 0; i < rows(); ++i) {
    for (std::size_t c = 0; c < indices.size(); ++c) {
      if (is_missing(i, indices[c])) {
        out.set_missing(i, c);
      } else {
        out.set(i, c, values_(i, indices[c]));
      }
    }
  }
  return out;
}

Matrix MaskedMatrix::to_dense() const {
  if (!complete()) {
    throw MissingCellError("matrix has " + std::to_string(missing_count()) +
                           " missing cells");
  }
  return values_;
}

bool MaskedMatrix::same_observed(const MaskedMatrix& other) const {
  if (rows() != other.rows() || cols() != other.cols() || mask_ != other.mask_) {
    return false;
  }
  auto a = values_.flat();
  auto b = other.values_.flat();
  for (std::size_t c = 0; c < mask_.size(); ++c) {
    if (!mask_[c] && a[c] != b[c]) return false;
  }
  return true;
}

MaskedMatrix hstack(std::span<const MaskedMatrix> blocks) {
  if (blocks.empty()) return {};
  const std::size_t n = blocks.front().rows();
  std::size_t width = 0;
  for (const auto& b : blocks) {
    if (b.rows() != n) throw ShapeError("hstack: row counts differ");
    width += b.cols();
  }
  MaskedMatrix out(n, width);
  std::size_t offset = 0;
  for (const auto& b : blocks) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < b.cols(); ++j) {
        if (b.is_missing(i, j)) {
          out.set_missing(i, offset + j);
        } else {
          out.set(i, offset + j, b.payload(i, j));
        }
      }
    }
    offset += b.cols();
  }
  return out;
}

MaskedMatrix vstack(std::span<const MaskedMatrix> blocks) {
  if (blocks.empty()) return {};
  const std::size_t p = blocks.front().cols();
  std::size_t n = 0;
  for (const auto& b : blocks) {
    if (b.cols() != p) throw ShapeError("vstack: column counts differ");
    n += b.rows();
  }
  MaskedMatrix out(n, p);
  std::size_t offset = 0;
  for (const auto& b : blocks) {
    for (std::size_t i = 0; i < b.rows(); ++i) {
      for (std::size_t j = 0; j < p; ++j) {
        if (b.is_missing(i, j)) {
          out.set_missing(offset + i, j);
        } else {
          out.set(offset + i, j, b.payload(i, j));
        }
      }
    }
    offset += b.rows();
  }
  return out;
}

}  // namespace promissing
