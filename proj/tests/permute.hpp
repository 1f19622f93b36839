#pragma once

#include <memory>
#include <vector>

#include "stgcast/nn.hpp"

namespace permute {

// new node i is old node perm[i]
inline stgcast::DenseMatrix adjacency(const stgcast::DenseMatrix& a, const std::vector<std::size_t>& perm) {
  stgcast::DenseMatrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < perm.size(); ++i)
    for (std::size_t j = 0; j < perm.size(); ++j) out(i, j) = a(perm[i], perm[j]);
  return out;
}

inline stgcast::Tensor3 nodes(const stgcast::Tensor3& x, const std::vector<std::size_t>& perm) {
  stgcast::Tensor3 out(x.n(), x.t(), x.d());
  for (std::size_t n = 0; n < x.n(); ++n)
    for (std::size_t t = 0; t < x.t(); ++t)
      for (std::size_t i = 0; i < perm.size(); ++i) out(n, t, i) = x(n, t, perm[i]);
  return out;
}

// Head columns are laid out as t_out blocks of d; permute inside each block.
inline stgcast::DenseMatrix head_columns(const stgcast::DenseMatrix& w, const std::vector<std::size_t>& perm) {
  const std::size_t d = perm.size();
  stgcast::DenseMatrix out(w.rows(), w.cols());
  for (std::size_t r = 0; r < w.rows(); ++r)
    for (std::size_t b = 0; b < w.cols() / d; ++b)
      for (std::size_t i = 0; i < d; ++i) out(r, b * d + i) = w(r, b * d + perm[i]);
  return out;
}

inline stgcast::nn::GCGRUModel model(const stgcast::nn::GCGRUModel& m, const std::vector<std::size_t>& perm) {
  stgcast::graph::NormalizedAdjacency a = m.a_hat;
  a.matrix = std::make_shared<const stgcast::DenseMatrix>(adjacency(*m.a_hat.matrix, perm));
  stgcast::nn::GCGRUModel out = m;
  out.a_hat = a;
  out.w_out = head_columns(m.w_out, perm);
  out.b_out = head_columns(m.b_out, perm);
  return out;
}

}  // namespace permute
