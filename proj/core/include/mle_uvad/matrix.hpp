// Copyright 2026 The mle-uvad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace mle_uvad {

class Rng;

/// Dense row-major matrix of doubles.
///
/// Frames, latent batches and layer weights are all stored as Matrix values.
/// A single frame is a row; a batch of N frames is an N x D matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  /// Row-list literal, e.g. Matrix{{1, 2}, {3, 4}}. Rows must have equal length.
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool all_finite() const;
  /// "RxC", used in error messages.
  std::string shape_string() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// a * b. Each output entry sums over the inner index in ascending order, so
/// the result is bitwise reproducible. Throws ShapeError on mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);
/// a * b^T, same summation order as matmul.
Matrix matmul_transposed(const Matrix& a, const Matrix& b);
/// a^T * b, reduction over rows of a and b in ascending order.
Matrix transposed_matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

Matrix elementwise(const Matrix& a, const std::function<double(double)>& f);

/// Adds `bias` to every row. bias.size() must equal m.cols().
void add_row_vector(Matrix& m, std::span<const double> bias);
/// Column sums, rows reduced in ascending order.
std::vector<double> column_sums(const Matrix& m);
/// Rows of `m` selected by `indices`, in the given order.
Matrix gather_rows(const Matrix& m, std::span<const std::size_t> indices);

/// Uniform draws on [-sqrt(6/fan_in), +sqrt(6/fan_in)].
Matrix init_weights(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng);

namespace activation_fn {
double relu(double x);
double relu_derivative(double x);
double sigmoid(double x);
double sigmoid_derivative(double x);
double tanh(double x);
double tanh_derivative(double x);
}  // namespace activation_fn

}  // namespace mle_uvad
