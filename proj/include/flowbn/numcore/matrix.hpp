#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace flowbn::num {

// Read-only row-major view over externally owned storage.
struct DenseView {
  const double* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;

  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  const double* row(std::size_t r) const { return data + r * cols; }
};

// Mutable row-major view.
struct DenseMutView {
  double* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;

  double& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double* row(std::size_t r) const { return data + r * cols; }
  operator DenseView() const { return {data, rows, cols}; }
};

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix from_row(std::span<const double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  DenseView view() const { return {data_.data(), rows_, cols_}; }
  DenseMutView mut_view() { return {data_.data(), rows_, cols_}; }

  void fill(double v);
  bool all_finite() const;

  // Copies the listed columns, in order, into a new matrix.
  Matrix select_columns(std::span<const std::size_t> columns) const;
  // Copies rows [begin, end).
  Matrix slice_rows(std::size_t begin, std::size_t end) const;
  // Copies the listed rows, in order.
  Matrix gather_rows(std::span<const std::size_t> indices) const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace flowbn::num
