#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace stgcast {

/// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }

  void fill(double v);
  bool same_shape(const DenseMatrix& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }
  std::string shape_string() const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// Rank-3 array (samples, time steps, detectors), row-major.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(std::size_t n, std::size_t t, std::size_t d, double fill = 0.0);
  Tensor3(std::size_t n, std::size_t t, std::size_t d, std::vector<double> values);

  std::size_t n() const noexcept { return n_; }
  std::size_t t() const noexcept { return t_; }
  std::size_t d() const noexcept { return d_; }
  std::size_t size() const noexcept { return values_.size(); }

  double& operator()(std::size_t i, std::size_t j, std::size_t k) { return values_[(i * t_ + j) * d_ + k]; }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const { return values_[(i * t_ + j) * d_ + k]; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<const double> slice_span(std::size_t i) const { return {values_.data() + i * t_ * d_, t_ * d_}; }
  std::span<double> slice_span(std::size_t i) { return {values_.data() + i * t_ * d_, t_ * d_}; }

  /// Sample i as a t x d matrix.
  DenseMatrix slice(std::size_t i) const;
  void set_slice(std::size_t i, const DenseMatrix& m);

  /// Samples at the given indices, in order.
  Tensor3 gather(std::span<const std::size_t> indices) const;

  bool same_shape(const Tensor3& o) const noexcept { return n_ == o.n_ && t_ == o.t_ && d_ == o.d_; }
  std::string shape_string() const;

  friend bool operator==(const Tensor3&, const Tensor3&) = default;

 private:
  std::size_t n_ = 0;
  std::size_t t_ = 0;
  std::size_t d_ = 0;
  std::vector<double> values_;
};

// Plain (non-differentiable) helpers built on the active kernel table.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix transpose(const DenseMatrix& a);
DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator*(double alpha, const DenseMatrix& a);

double max_abs(const DenseMatrix& a);
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);
double max_abs_diff(std::span<const double> a, std::span<const double> b);
bool all_finite(std::span<const double> v);

}  // namespace stgcast
