#include <cstdlib>
#include <string_view>

#include "kernels_impl.hpp"
#include "xvg/kernels.hpp"

namespace xvg::kernels {
namespace {

constexpr KernelTable kScalar{Isa::scalar,          scalar::dot,          scalar::axpy,
                              scalar::squared_distance, scalar::blend_toward, scalar::affine_clamp};

#if defined(XVG_HAVE_AVX2)
constexpr KernelTable kAvx2{Isa::avx2,             avx2::dot,          avx2::axpy,
                            avx2::squared_distance, avx2::blend_toward, avx2::affine_clamp};

bool cpu_has_avx2() noexcept {
#if defined(__GNUC__) || defined(__clang__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}
#endif

const KernelTable& select() noexcept {
  const char* env = std::getenv("XVG_SIMD");
  const std::string_view pinned = env ? env : "auto";
  if (pinned == "scalar") return kScalar;
  if (const KernelTable* t = avx2_table()) return *t;
  return kScalar;
}

}  // namespace

const KernelTable& scalar_table() noexcept { return kScalar; }

const KernelTable* avx2_table() noexcept {
#if defined(XVG_HAVE_AVX2)
  static const bool supported = cpu_has_avx2();
  return supported ? &kAvx2 : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() noexcept {
  static const KernelTable& table = select();
  return table;
}

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
  }
  return "unknown";
}

}  // namespace xvg::kernels
