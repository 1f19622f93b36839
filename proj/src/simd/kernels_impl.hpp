#pragma once

#include <algorithm>
#include <cstddef>

#include "stgcast/simd/kernels.hpp"

namespace stgcast::simd {

namespace scalar {
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
void add(const double* a, const double* b, double* out, std::size_t n);
void sub(const double* a, const double* b, double* out, std::size_t n);
void mul(const double* a, const double* b, double* out, std::size_t n);
void scale(const double* a, double alpha, double* out, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void mul_acc(const double* a, const double* b, double* y, std::size_t n);
}  // namespace scalar

#ifdef STGCAST_HAVE_AVX2
namespace avx2 {
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
void add(const double* a, const double* b, double* out, std::size_t n);
void sub(const double* a, const double* b, double* out, std::size_t n);
void mul(const double* a, const double* b, double* out, std::size_t n);
void scale(const double* a, double alpha, double* out, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void mul_acc(const double* a, const double* b, double* y, std::size_t n);
}  // namespace avx2
#endif

}  // namespace stgcast::simd
