#pragma once

// Dense double-precision kernels behind every matrix operation.
//
// Each kernel family has a scalar reference implementation and, where the
// target supports it, an AVX2 variant. The variants are required to produce
// bit-identical results to the scalar reference: every output element is
// accumulated in the same order (k ascending, starting from zero, then added
// into the destination) and no FMA contraction is allowed. The active table is
// chosen once at startup from CPU features and the STGCAST_KERNELS
// environment variable ("scalar" or "avx2").

#include <cstddef>
#include <span>
#include <string_view>

namespace stgcast::simd {

struct KernelTable {
  std::string_view name;

  // c[m x n] += a[m x k] * b[k x n]
  void (*gemm_nn)(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
  // c[m x n] += a^T * b, with a stored [k x m] and b stored [k x n]
  void (*gemm_tn)(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
  // c[m x n] += a * b^T, with a stored [m x k] and b stored [n x k]
  void (*gemm_nt)(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);

  void (*add)(const double* a, const double* b, double* out, std::size_t n);
  void (*sub)(const double* a, const double* b, double* out, std::size_t n);
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  void (*scale)(const double* a, double alpha, double* out, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y += a * b
  void (*mul_acc)(const double* a, const double* b, double* y, std::size_t n);
};

const KernelTable& scalar_kernels();

/// nullptr when the AVX2 variant was not compiled in or the CPU lacks AVX2.
const KernelTable* avx2_kernels();

/// Every table usable on this machine, scalar first.
std::span<const KernelTable* const> available_kernels();

/// The table used by DenseMatrix and the autodiff ops.
const KernelTable& active_kernels();

}  // namespace stgcast::simd
