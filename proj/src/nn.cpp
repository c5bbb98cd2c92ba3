#include "xvg/nn.hpp"

#include <algorithm>
#include <limits>

#include "xvg/kernels.hpp"

namespace xvg::nn {

Matrix linear(const Matrix& x, const Matrix& weight, const Matrix& bias) {
  if (x.cols() != weight.cols() || bias.cols() != weight.rows() || bias.rows() != 1) {
    throw ArgumentError("linear: shape mismatch");
  }
  const auto& k = kernels::active();
  Matrix y(x.rows(), weight.rows());
  for (std::size_t n = 0; n < x.rows(); ++n) {
    const double* xr = x.row(n).data();
    for (std::size_t o = 0; o < weight.rows(); ++o) {
      y(n, o) = k.dot(weight.row(o).data(), xr, x.cols()) + bias[o];
    }
  }
  return y;
}

Matrix linear_backward(const Matrix& x, const Matrix& weight, const Matrix& dy, Matrix* dweight,
                       Matrix* dbias) {
  const auto& k = kernels::active();
  Matrix dx(x.rows(), x.cols());
  for (std::size_t n = 0; n < x.rows(); ++n) {
    for (std::size_t o = 0; o < weight.rows(); ++o) {
      const double g = dy(n, o);
      if (g == 0.0) continue;
      k.axpy(g, weight.row(o).data(), dx.row(n).data(), x.cols());
      if (dweight) k.axpy(g, x.row(n).data(), dweight->row(o).data(), x.cols());
      if (dbias) (*dbias)[o] += g;
    }
  }
  return dx;
}

Matrix tanh(const Matrix& x) {
  Matrix y = x;
  for (double& v : y.values()) v = std::tanh(v);
  return y;
}

Matrix tanh_backward(const Matrix& y, const Matrix& dy) {
  Matrix dx(y.rows(), y.cols());
  for (std::size_t i = 0; i < y.size(); ++i) dx[i] = dy[i] * (1.0 - y[i] * y[i]);
  return dx;
}

Matrix l2_normalize_rows(const Matrix& x, std::vector<double>* norms) {
  Matrix y = x;
  if (norms) norms->assign(x.rows(), 0.0);
  const auto& k = kernels::active();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    const double n = std::sqrt(k.dot(row.data(), row.data(), row.size()));
    if (!(n > 0.0)) throw ArgumentError("l2_normalize_rows: zero or non-finite row norm");
    for (double& v : y.row(r)) v /= n;
    if (norms) (*norms)[r] = n;
  }
  return y;
}

Matrix l2_normalize_rows_backward(const Matrix& y, std::span<const double> norms, const Matrix& dy) {
  const auto& k = kernels::active();
  Matrix dx(y.rows(), y.cols());
  for (std::size_t r = 0; r < y.rows(); ++r) {
    const double proj = k.dot(y.row(r).data(), dy.row(r).data(), y.cols());
    for (std::size_t c = 0; c < y.cols(); ++c) dx(r, c) = (dy(r, c) - y(r, c) * proj) / norms[r];
  }
  return dx;
}

double log_sum_exp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

void add_inplace(Matrix& acc, const Matrix& delta) {
  if (!acc.same_shape(delta)) throw ArgumentError("add_inplace: shape mismatch");
  kernels::active().axpy(1.0, delta.data(), acc.data(), acc.size());
}

Matrix uniform_matrix(std::size_t rows, std::size_t cols, double bound, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = uniform(rng, -bound, bound);
  return m;
}

}  // namespace xvg::nn
