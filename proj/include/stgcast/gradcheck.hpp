#pragma once

#include <functional>

#include "stgcast/matrix.hpp"

namespace stgcast {

/// Central differences (f(x + h e_ij) - f(x - h e_ij)) / 2h for every entry.
DenseMatrix finite_difference_gradient(const std::function<double(const DenseMatrix&)>& f, const DenseMatrix& x,
                                       double h = 1e-5);

/// |a - n| / max(|a|, |n|, 1e-8)
double relative_error(double analytic, double numeric);

/// Largest entrywise relative_error between two same-shape gradients.
double max_relative_error(const DenseMatrix& analytic, const DenseMatrix& numeric);

}  // namespace stgcast
