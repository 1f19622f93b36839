// AVX2 variants. Compiled with -mavx2 only; the dispatcher guarantees these
// are never called on a CPU without AVX2.

#include <immintrin.h>

#include <vector>

#include "kernels_impl.hpp"

namespace stgcast::simd::avx2 {

namespace {

// One output row: crow[j] += sum_p arow(p) * b[p*n + j], accumulation in p order
// from zero, matching the scalar reference element for element.
template <class ALoad>
inline void gemm_row(ALoad aval, const double* b, double* crow, std::size_t k, std::size_t n) {
  std::size_t j = 0;
  for (; j + 16 <= n; j += 16) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    __m256d acc2 = _mm256_setzero_pd();
    __m256d acc3 = _mm256_setzero_pd();
    for (std::size_t p = 0; p < k; ++p) {
      const __m256d av = _mm256_set1_pd(aval(p));
      const double* brow = b + p * n + j;
      acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(av, _mm256_loadu_pd(brow)));
      acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(av, _mm256_loadu_pd(brow + 4)));
      acc2 = _mm256_add_pd(acc2, _mm256_mul_pd(av, _mm256_loadu_pd(brow + 8)));
      acc3 = _mm256_add_pd(acc3, _mm256_mul_pd(av, _mm256_loadu_pd(brow + 12)));
    }
    _mm256_storeu_pd(crow + j, _mm256_add_pd(_mm256_loadu_pd(crow + j), acc0));
    _mm256_storeu_pd(crow + j + 4, _mm256_add_pd(_mm256_loadu_pd(crow + j + 4), acc1));
    _mm256_storeu_pd(crow + j + 8, _mm256_add_pd(_mm256_loadu_pd(crow + j + 8), acc2));
    _mm256_storeu_pd(crow + j + 12, _mm256_add_pd(_mm256_loadu_pd(crow + j + 12), acc3));
  }
  for (; j + 4 <= n; j += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t p = 0; p < k; ++p) {
      acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_set1_pd(aval(p)), _mm256_loadu_pd(b + p * n + j)));
    }
    _mm256_storeu_pd(crow + j, _mm256_add_pd(_mm256_loadu_pd(crow + j), acc));
  }
  for (; j < n; ++j) {
    double s = 0.0;
    for (std::size_t p = 0; p < k; ++p) s += aval(p) * b[p * n + j];
    crow[j] += s;
  }
}

}  // namespace

void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    gemm_row([arow](std::size_t p) { return arow[p]; }, b, c + i * n, k, n);
  }
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    gemm_row([a, m, i](std::size_t p) { return a[p * m + i]; }, b, c + i * n, k, n);
  }
}

void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  thread_local std::vector<double> bt;
  bt.resize(k * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t p = 0; p < k; ++p) bt[p * n + j] = b[j * k + p];
  gemm_nn(a, bt.data(), c, m, k, n);
}

void add(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void scale(const double* a, double alpha, double* out, std::size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), av));
  for (; i < n; ++i) out[i] = a[i] * alpha;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(av, _mm256_loadu_pd(x + i))));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void mul_acc(const double* a, const double* b, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i,
                     _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i))));
  for (; i < n; ++i) y[i] += a[i] * b[i];
}

}  // namespace stgcast::simd::avx2
