#include <algorithm>

#include "kernels_impl.hpp"

namespace xvg::kernels::scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double squared_distance(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

void blend_toward(float* px, const float* alpha, float target, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) px[i] += alpha[i] * (target - px[i]);
}

void affine_clamp(float* px, float scale, float offset, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) px[i] = std::clamp(px[i] * scale + offset, 0.0f, 1.0f);
}

}  // namespace xvg::kernels::scalar
