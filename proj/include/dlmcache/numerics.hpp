// Copyright 2026 The dlmcache Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace dlmcache {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  // Copies the listed rows, in order, into a new matrix.
  Matrix gather_rows(std::span<const std::size_t> indices) const;
  // Rows [begin, end).
  Matrix slice_rows(std::size_t begin, std::size_t end) const;
  // Stacks `below` under this matrix; column counts must agree.
  Matrix vconcat(const Matrix& below) const;

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Multiply-add tally. Stays at zero while disabled.
class OpCounter {
 public:
  explicit OpCounter(bool enabled = false) : enabled_(enabled) {}

  void add(std::uint64_t multiply_adds) {
    if (enabled_) multiply_adds_ += multiply_adds;
  }
  std::uint64_t multiply_adds() const { return multiply_adds_; }
  bool enabled() const { return enabled_; }
  void reset() { multiply_adds_ = 0; }

 private:
  std::uint64_t multiply_adds_ = 0;
  bool enabled_ = false;
};

// a × b. Adds a.rows × a.cols × b.cols to `counter` when given.
Matrix matmul(const Matrix& a, const Matrix& b, OpCounter* counter = nullptr);

// Numerically stable softmax over each row (max-subtracted).
Matrix softmax_rows(const Matrix& a);
void softmax_inplace(std::span<double> values);

// x / sqrt(mean(x^2) + eps) per row, no learned gain.
Matrix rms_norm_rows(const Matrix& a, double eps = 1e-6);

void add_inplace(Matrix& target, const Matrix& addend);
// Tanh-approximated GELU applied elementwise.
void gelu_inplace(Matrix& a);

double dot(std::span<const double> a, std::span<const double> b);
double frobenius_norm(const Matrix& a);

// Sliding-window max with odd `kernel_size`, padding the edges with -inf so
// the output has the input's length. Throws ConfigError for even kernels.
std::vector<double> maxpool_1d(std::span<const double> scores, std::size_t kernel_size);

}  // namespace dlmcache
