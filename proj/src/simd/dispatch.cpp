#include <cstdlib>
#include <string_view>
#include <vector>

#include "kernels_impl.hpp"

namespace stgcast::simd {

namespace {

constexpr KernelTable kScalar{
    "scalar",    scalar::gemm_nn, scalar::gemm_tn, scalar::gemm_nt, scalar::add,
    scalar::sub, scalar::mul,     scalar::scale,   scalar::axpy,    scalar::mul_acc,
};

#ifdef STGCAST_HAVE_AVX2
constexpr KernelTable kAvx2{
    "avx2",    avx2::gemm_nn, avx2::gemm_tn, avx2::gemm_nt, avx2::add,
    avx2::sub, avx2::mul,     avx2::scale,   avx2::axpy,    avx2::mul_acc,
};
#endif

bool cpu_has_avx2() {
#if defined(STGCAST_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable& select_active() {
  const char* env = std::getenv("STGCAST_KERNELS");
  const std::string_view want = env ? env : "";
  if (want == "scalar") return kScalar;
  if (const KernelTable* t = avx2_kernels()) return *t;
  return kScalar;
}

}  // namespace

const KernelTable& scalar_kernels() { return kScalar; }

const KernelTable* avx2_kernels() {
#ifdef STGCAST_HAVE_AVX2
  static const bool ok = cpu_has_avx2();
  return ok ? &kAvx2 : nullptr;
#else
  return nullptr;
#endif
}

std::span<const KernelTable* const> available_kernels() {
  static const std::vector<const KernelTable*> tables = [] {
    std::vector<const KernelTable*> t{&kScalar};
    if (const KernelTable* v = avx2_kernels()) t.push_back(v);
    return t;
  }();
  return tables;
}

const KernelTable& active_kernels() {
  static const KernelTable& table = select_active();
  return table;
}

}  // namespace stgcast::simd
