#pragma once

// Dense inner loops shared by the encoders, heads, losses, retrieval and
// weather synthesis. Each kernel has a scalar reference implementation and,
// where the build allows it, an AVX2+FMA variant. The active variant is
// chosen once at first use from CPUID, and can be pinned with the
// XVG_SIMD environment variable (`scalar`, `avx2`, `auto`).
//
// Variants agree to within floating-point reassociation; the equivalence
// tests in tests/kernels_test.cpp pin the tolerances.

#include <cstddef>
#include <span>
#include <string_view>

namespace xvg::kernels {

enum class Isa { scalar, avx2 };

struct KernelTable {
  Isa isa;
  /// Σ a[i]·b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  /// y[i] += alpha·x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  /// Σ (a[i]−b[i])²
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  /// px[i] += alpha[i]·(target − px[i])
  void (*blend_toward)(float* px, const float* alpha, float target, std::size_t n);
  /// px[i] = clamp(px[i]·scale + offset, 0, 1)
  void (*affine_clamp)(float* px, float scale, float offset, std::size_t n);
};

const KernelTable& scalar_table() noexcept;
/// nullptr when the AVX2 variant was not compiled in or the CPU lacks AVX2/FMA.
const KernelTable* avx2_table() noexcept;
/// The table selected for this process.
const KernelTable& active() noexcept;
std::string_view isa_name(Isa isa) noexcept;

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}
inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  return active().squared_distance(a.data(), b.data(), a.size());
}
inline void blend_toward(std::span<float> px, std::span<const float> alpha, float target) {
  active().blend_toward(px.data(), alpha.data(), target, px.size());
}
inline void affine_clamp(std::span<float> px, float scale, float offset) {
  active().affine_clamp(px.data(), scale, offset, px.size());
}

}  // namespace xvg::kernels
