#include "stgcast/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "stgcast/error.hpp"
#include "stgcast/simd/kernels.hpp"

namespace stgcast {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw ShapeError("tensor", "value count " + std::to_string(values_.size()) + " does not match shape " +
                                   std::to_string(rows) + "x" + std::to_string(cols));
  }
}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> v;
  v.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("tensor", "ragged initializer rows");
    v.insert(v.end(), row.begin(), row.end());
  }
  return DenseMatrix(r, c, std::move(v));
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void DenseMatrix::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

std::string DenseMatrix::shape_string() const { return std::to_string(rows_) + "x" + std::to_string(cols_); }

Tensor3::Tensor3(std::size_t n, std::size_t t, std::size_t d, double fill)
    : n_(n), t_(t), d_(d), values_(n * t * d, fill) {}

Tensor3::Tensor3(std::size_t n, std::size_t t, std::size_t d, std::vector<double> values)
    : n_(n), t_(t), d_(d), values_(std::move(values)) {
  if (values_.size() != n * t * d) throw ShapeError("tensor", "value count does not match " + shape_string());
}

DenseMatrix Tensor3::slice(std::size_t i) const {
  auto s = slice_span(i);
  return DenseMatrix(t_, d_, std::vector<double>(s.begin(), s.end()));
}

void Tensor3::set_slice(std::size_t i, const DenseMatrix& m) {
  if (m.rows() != t_ || m.cols() != d_) {
    throw ShapeError("tensor", "slice shape " + m.shape_string() + " does not fit " + shape_string());
  }
  std::copy(m.values().begin(), m.values().end(), slice_span(i).begin());
}

Tensor3 Tensor3::gather(std::span<const std::size_t> indices) const {
  Tensor3 out(indices.size(), t_, d_);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    auto src = slice_span(indices[k]);
    std::copy(src.begin(), src.end(), out.slice_span(k).begin());
  }
  return out;
}

std::string Tensor3::shape_string() const {
  return "(" + std::to_string(n_) + ", " + std::to_string(t_) + ", " + std::to_string(d_) + ")";
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("tensor", "matmul shape mismatch " + a.shape_string() + " * " + b.shape_string());
  }
  DenseMatrix c(a.rows(), b.cols());
  simd::active_kernels().gemm_nn(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
  return c;
}

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b) {
  if (!a.same_shape(b)) throw ShapeError("tensor", "add shape mismatch " + a.shape_string() + " vs " + b.shape_string());
  DenseMatrix c(a.rows(), a.cols());
  simd::active_kernels().add(a.data(), b.data(), c.data(), a.size());
  return c;
}

DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b) {
  if (!a.same_shape(b)) throw ShapeError("tensor", "sub shape mismatch " + a.shape_string() + " vs " + b.shape_string());
  DenseMatrix c(a.rows(), a.cols());
  simd::active_kernels().sub(a.data(), b.data(), c.data(), a.size());
  return c;
}

DenseMatrix operator*(double alpha, const DenseMatrix& a) {
  DenseMatrix c(a.rows(), a.cols());
  simd::active_kernels().scale(a.data(), alpha, c.data(), a.size());
  return c;
}

double max_abs(const DenseMatrix& a) {
  double m = 0.0;
  for (double v : a.values()) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("tensor", "max_abs_diff length mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  if (!a.same_shape(b)) throw ShapeError("tensor", "max_abs_diff shape mismatch " + a.shape_string() + " vs " + b.shape_string());
  return max_abs_diff(a.values(), b.values());
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace stgcast
