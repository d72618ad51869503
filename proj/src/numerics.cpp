// Copyright 2026 The dlmcache Authors
// SPDX-License-Identifier: Apache-2.0

#include "dlmcache/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dlmcache/errors.hpp"

namespace dlmcache {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("matrix data length " + std::to_string(data_.size()) + " != " +
                     std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("ragged matrix initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::gather_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows_) throw ShapeError("gather_rows: row index out of range");
    std::copy_n(data_.begin() + indices[i] * cols_, cols_, out.data_.begin() + i * cols_);
  }
  return out;
}

Matrix Matrix::slice_rows(std::size_t begin, std::size_t end) const {
  if (begin > end || end > rows_) throw ShapeError("slice_rows: bad range");
  Matrix out(end - begin, cols_);
  std::copy(data_.begin() + begin * cols_, data_.begin() + end * cols_, out.data_.begin());
  return out;
}

Matrix Matrix::vconcat(const Matrix& below) const {
  if (empty()) return below;
  if (below.empty()) return *this;
  if (below.cols_ != cols_) throw ShapeError("vconcat: column mismatch");
  Matrix out(rows_ + below.rows_, cols_);
  std::copy(data_.begin(), data_.end(), out.data_.begin());
  std::copy(below.data_.begin(), below.data_.end(), out.data_.begin() + data_.size());
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b, OpCounter* counter) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " times " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  Matrix out(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    double* out_row = out.row(i).data();
    const double* a_row = a.row(i).data();
    for (std::size_t p = 0; p < k; ++p) {
      const double scale = a_row[p];
      const double* b_row = b.row(p).data();
      for (std::size_t j = 0; j < m; ++j) out_row[j] += scale * b_row[j];
    }
  }
  if (counter != nullptr) counter->add(static_cast<std::uint64_t>(n) * k * m);
  return out;
}

void softmax_inplace(std::span<double> values) {
  if (values.empty()) return;
  const double peak = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double& v : values) {
    v = std::exp(v - peak);
    sum += v;
  }
  for (double& v : values) v /= sum;
}

Matrix softmax_rows(const Matrix& a) {
  Matrix out = a;
  for (std::size_t r = 0; r < out.rows(); ++r) softmax_inplace(out.row(r));
  return out;
}

Matrix rms_norm_rows(const Matrix& a, double eps) {
  Matrix out = a;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    double mean_sq = 0.0;
    for (double v : row) mean_sq += v * v;
    mean_sq /= static_cast<double>(row.size());
    const double inv = 1.0 / std::sqrt(mean_sq + eps);
    for (double& v : row) v *= inv;
  }
  return out;
}

void add_inplace(Matrix& target, const Matrix& addend) {
  if (target.rows() != addend.rows() || target.cols() != addend.cols()) {
    throw ShapeError("add_inplace: shape mismatch");
  }
  auto t = target.data();
  auto s = addend.data();
  for (std::size_t i = 0; i < t.size(); ++i) t[i] += s[i];
}

void gelu_inplace(Matrix& a) {
  constexpr double kSqrt2OverPi = 0.7978845608028654;
  for (double& v : a.data()) {
    v = 0.5 * v * (1.0 + std::tanh(kSqrt2OverPi * (v + 0.044715 * v * v * v)));
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

double frobenius_norm(const Matrix& a) {
  double sum = 0.0;
  for (double v : a.data()) sum += v * v;
  return std::sqrt(sum);
}

std::vector<double> maxpool_1d(std::span<const double> scores, std::size_t kernel_size) {
  if (kernel_size == 0 || kernel_size % 2 == 0) {
    throw ConfigError("maxpool_1d: kernel_size must be odd, got " + std::to_string(kernel_size));
  }
  const std::size_t half = kernel_size / 2;
  const std::size_t n = scores.size();
  std::vector<double> out(n, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + half);
    for (std::size_t j = lo; j <= hi; ++j) out[i] = std::max(out[i], scores[j]);
  }
  return out;
}

}  // namespace dlmcache
