#include <doctest.h>

#include <cmath>
#include <vector>

#include "xvg/kernels.hpp"
#include "xvg/seed.hpp"

using namespace xvg;

namespace {

std::vector<double> doubles(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = uniform(rng, -2.0, 2.0);
  return v;
}

std::vector<float> floats(std::size_t n, Rng& rng, double lo, double hi) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(uniform(rng, lo, hi));
  return v;
}

// Lengths around the 4/8-lane boundaries plus a long one.
const std::size_t kLengths[] = {0, 1, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 33, 64, 67, 1000};

}  // namespace

TEST_CASE("active kernel table is one of the compiled variants") {
  const auto& a = kernels::active();
  CHECK((a.isa == kernels::Isa::scalar || a.isa == kernels::Isa::avx2));
  CHECK(kernels::isa_name(kernels::Isa::scalar) == "scalar");
  CHECK(kernels::scalar_table().isa == kernels::Isa::scalar);
}

TEST_CASE("scalar kernels match their definitions") {
  const auto& s = kernels::scalar_table();
  const double a[] = {1, 2, 3}, b[] = {4, -5, 6};
  CHECK(s.dot(a, b, 3) == 12.0);
  CHECK(s.squared_distance(a, b, 3) == 9.0 + 49.0 + 9.0);
  double y[] = {1, 1, 1};
  s.axpy(2.0, a, y, 3);
  CHECK(y[2] == 7.0);
  float px[] = {0.0f, 1.0f};
  const float al[] = {0.5f, 0.25f};
  s.blend_toward(px, al, 0.8f, 2);
  CHECK(px[0] == doctest::Approx(0.4));
  CHECK(px[1] == doctest::Approx(0.95));
  float q[] = {0.2f, 0.9f, -1.0f};
  s.affine_clamp(q, 2.0f, 0.1f, 3);
  CHECK(q[0] == doctest::Approx(0.5));
  CHECK(q[1] == 1.0f);
  CHECK(q[2] == 0.0f);
}

TEST_CASE("AVX2 kernels agree with the scalar reference") {
  const kernels::KernelTable* v = kernels::avx2_table();
  if (!v) {
    MESSAGE("AVX2 variant unavailable on this build or CPU; nothing to compare");
    return;
  }
  const auto& s = kernels::scalar_table();
  Rng rng(42);
  for (std::size_t n : kLengths) {
    CAPTURE(n);
    const auto a = doubles(n, rng), b = doubles(n, rng);
    // Reassociated sums: relative error bounded by n·eps times the absolute sum.
    double abs_sum = 0, abs_sq = 0;
    for (std::size_t i = 0; i < n; ++i) {
      abs_sum += std::abs(a[i] * b[i]);
      abs_sq += (a[i] - b[i]) * (a[i] - b[i]);
    }
    CHECK(std::abs(s.dot(a.data(), b.data(), n) - v->dot(a.data(), b.data(), n)) <= 1e-14 * (abs_sum + 1) * (n + 1));
    CHECK(std::abs(s.squared_distance(a.data(), b.data(), n) - v->squared_distance(a.data(), b.data(), n)) <=
          1e-14 * (abs_sq + 1) * (n + 1));

    auto y1 = doubles(n, rng);
    auto y2 = y1;
    s.axpy(0.37, a.data(), y1.data(), n);
    v->axpy(0.37, a.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) <= 1e-15 * (std::abs(y1[i]) + 1));

    auto p1 = floats(n, rng, 0, 1);
    auto p2 = p1;
    const auto alpha = floats(n, rng, 0, 1);
    s.blend_toward(p1.data(), alpha.data(), 0.78f, n);
    v->blend_toward(p2.data(), alpha.data(), 0.78f, n);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(p1[i] - p2[i]) <= 1e-6f);

    auto q1 = floats(n, rng, -0.5, 1.5);
    auto q2 = q1;
    s.affine_clamp(q1.data(), 1.3f, -0.1f, n);
    v->affine_clamp(q2.data(), 1.3f, -0.1f, n);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::abs(q1[i] - q2[i]) <= 1e-6f);
      CHECK(q2[i] >= 0.0f);
      CHECK(q2[i] <= 1.0f);
    }
  }
}
