#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstring>
#include <random>
#include <vector>

#include "stgcast/simd/kernels.hpp"

using stgcast::simd::KernelTable;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("scalar table is always available and listed first") {
  const auto tables = stgcast::simd::available_kernels();
  REQUIRE(!tables.empty());
  CHECK(tables[0]->name == "scalar");
  CHECK(stgcast::simd::active_kernels().gemm_nn != nullptr);
}

TEST_CASE("scalar gemm agrees with a naive triple loop") {
  std::mt19937_64 rng(1);
  const KernelTable& s = stgcast::simd::scalar_kernels();
  const std::size_t m = 5, k = 7, n = 3;
  const auto a = random_vec(rng, m * k), b = random_vec(rng, k * n);
  std::vector<double> c(m * n, 1.0);
  s.gemm_nn(a.data(), b.data(), c.data(), m, k, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double ref = 0.0;
      for (std::size_t p = 0; p < k; ++p) ref += a[i * k + p] * b[p * n + j];
      CHECK(c[i * n + j] == doctest::Approx(1.0 + ref).epsilon(1e-13));
    }
}

TEST_CASE("every kernel variant is bit-identical to the scalar reference") {
  const KernelTable& ref = stgcast::simd::scalar_kernels();
  const auto tables = stgcast::simd::available_kernels();
  std::mt19937_64 rng(99);
  const std::size_t dims[] = {1, 2, 3, 4, 5, 7, 8, 15, 16, 17, 33, 64, 65};
  for (const KernelTable* t : tables) {
    CAPTURE(t->name);
    for (std::size_t m : {1, 3, 12, 37}) {
      for (std::size_t k : dims) {
        for (std::size_t n : dims) {
          const auto a = random_vec(rng, m * k), b = random_vec(rng, k * n), c0 = random_vec(rng, m * n);
          auto c1 = c0, c2 = c0;
          ref.gemm_nn(a.data(), b.data(), c1.data(), m, k, n);
          t->gemm_nn(a.data(), b.data(), c2.data(), m, k, n);
          CHECK(bit_equal(c1, c2));

          // a stored k x m
          c1 = c0;
          c2 = c0;
          ref.gemm_tn(a.data(), b.data(), c1.data(), m, k, n);
          t->gemm_tn(a.data(), b.data(), c2.data(), m, k, n);
          CHECK(bit_equal(c1, c2));

          // b stored n x k
          c1 = c0;
          c2 = c0;
          ref.gemm_nt(a.data(), b.data(), c1.data(), m, k, n);
          t->gemm_nt(a.data(), b.data(), c2.data(), m, k, n);
          CHECK(bit_equal(c1, c2));
        }
      }
    }
    for (std::size_t n : dims) {
      const auto a = random_vec(rng, n), b = random_vec(rng, n), y0 = random_vec(rng, n);
      std::vector<double> o1(n), o2(n);
      ref.add(a.data(), b.data(), o1.data(), n);
      t->add(a.data(), b.data(), o2.data(), n);
      CHECK(bit_equal(o1, o2));
      ref.sub(a.data(), b.data(), o1.data(), n);
      t->sub(a.data(), b.data(), o2.data(), n);
      CHECK(bit_equal(o1, o2));
      ref.mul(a.data(), b.data(), o1.data(), n);
      t->mul(a.data(), b.data(), o2.data(), n);
      CHECK(bit_equal(o1, o2));
      ref.scale(a.data(), -0.37, o1.data(), n);
      t->scale(a.data(), -0.37, o2.data(), n);
      CHECK(bit_equal(o1, o2));
      auto y1 = y0, y2 = y0;
      ref.axpy(1.3, a.data(), y1.data(), n);
      t->axpy(1.3, a.data(), y2.data(), n);
      CHECK(bit_equal(y1, y2));
      y1 = y0;
      y2 = y0;
      ref.mul_acc(a.data(), b.data(), y1.data(), n);
      t->mul_acc(a.data(), b.data(), y2.data(), n);
      CHECK(bit_equal(y1, y2));
    }
  }
}

TEST_CASE("kernels tolerate in-place elementwise output") {
  for (const KernelTable* t : stgcast::simd::available_kernels()) {
    std::vector<double> a{1, 2, 3, 4, 5, 6, 7};
    t->scale(a.data(), 2.0, a.data(), a.size());
    CHECK(a[6] == 14.0);
    t->add(a.data(), a.data(), a.data(), a.size());
    CHECK(a[0] == 4.0);
  }
}
