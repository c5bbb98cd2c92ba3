#pragma once

#include <cstddef>

namespace xvg::kernels {

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
void blend_toward(float* px, const float* alpha, float target, std::size_t n);
void affine_clamp(float* px, float scale, float offset, std::size_t n);
}  // namespace scalar

#if defined(XVG_HAVE_AVX2)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
void blend_toward(float* px, const float* alpha, float target, std::size_t n);
void affine_clamp(float* px, float scale, float offset, std::size_t n);
}  // namespace avx2
#endif

}  // namespace xvg::kernels
