#include "stgcast/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "stgcast/error.hpp"

namespace stgcast {

DenseMatrix finite_difference_gradient(const std::function<double(const DenseMatrix&)>& f, const DenseMatrix& x,
                                       double h) {
  DenseMatrix grad(x.rows(), x.cols());
  DenseMatrix probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe.values()[i];
    probe.values()[i] = orig + h;
    const double fp = f(probe);
    probe.values()[i] = orig - h;
    const double fm = f(probe);
    probe.values()[i] = orig;
    grad.values()[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

double max_relative_error(const DenseMatrix& analytic, const DenseMatrix& numeric) {
  if (!analytic.same_shape(numeric)) {
    throw ShapeError("tensor", "gradient shapes differ: " + analytic.shape_string() + " vs " + numeric.shape_string());
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    worst = std::max(worst, relative_error(analytic.values()[i], numeric.values()[i]));
  }
  return worst;
}

}  // namespace stgcast
