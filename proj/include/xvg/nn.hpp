#pragma once

// Small dense layers with hand-written backward passes. Batches are
// row-major: one sample per row.

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "xvg/matrix.hpp"
#include "xvg/seed.hpp"

namespace xvg::nn {

/// Y = X·Wᵀ + b, with W out×in and b 1×out.
Matrix linear(const Matrix& x, const Matrix& weight, const Matrix& bias);

/// Accumulates dW += dYᵀ·X and db += Σ_rows dY. Returns dX = dY·W.
/// Either gradient pointer may be null to skip that accumulation.
Matrix linear_backward(const Matrix& x, const Matrix& weight, const Matrix& dy, Matrix* dweight,
                       Matrix* dbias);

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0); }
inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

/// Exact GELU: x·Φ(x).
inline double gelu(double x) { return x * normal_cdf(x); }
inline double gelu_derivative(double x) { return normal_cdf(x) + x * normal_pdf(x); }

Matrix tanh(const Matrix& x);
/// dX from dY given Y = tanh(X).
Matrix tanh_backward(const Matrix& y, const Matrix& dy);

/// Scales each row to unit Euclidean norm. `norms` receives the pre-scaling norms.
Matrix l2_normalize_rows(const Matrix& x, std::vector<double>* norms = nullptr);
/// dX from dY given Y = normalize(X) and the saved norms.
Matrix l2_normalize_rows_backward(const Matrix& y, std::span<const double> norms, const Matrix& dy);

/// log Σ exp(v), shifted by the max.
double log_sum_exp(std::span<const double> v);

void add_inplace(Matrix& acc, const Matrix& delta);

/// Entries drawn uniformly from [-bound, bound).
Matrix uniform_matrix(std::size_t rows, std::size_t cols, double bound, Rng& rng);

}  // namespace xvg::nn
