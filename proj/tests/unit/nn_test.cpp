#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "xvg/matrix.hpp"
#include "xvg/nn.hpp"
#include "xvg/seed.hpp"

using namespace xvg;

TEST_CASE("linear matches a loop oracle and its backward matches finite differences") {
  Rng rng(3);
  Matrix x = oracle::random_matrix(3, 5, rng), w = oracle::random_matrix(4, 5, rng), b = oracle::random_matrix(1, 4, rng);
  const Matrix y = nn::linear(x, w, b);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t o = 0; o < 4; ++o) CHECK(y(r, o) == doctest::Approx(oracle::dot_rows(x, r, w, o) + b(0, o)).epsilon(1e-12));

  const Matrix probe = oracle::random_matrix(3, 4, rng);
  auto loss = [&] {
    const Matrix yy = nn::linear(x, w, b);
    double s = 0;
    for (std::size_t i = 0; i < yy.size(); ++i) s += yy[i] * probe[i];
    return s;
  };
  Matrix dw(4, 5), db(1, 4);
  const Matrix dx = nn::linear_backward(x, w, probe, &dw, &db);
  CHECK(oracle::fd_check(loss, w, dw, 1) < 1e-7);
  CHECK(oracle::fd_check(loss, b, db, 2) < 1e-7);
  CHECK(oracle::fd_check(loss, x, dx, 3) < 1e-7);
}

TEST_CASE("l2 normalization gives unit rows and an exact backward") {
  Rng rng(4);
  Matrix x = oracle::random_matrix(3, 6, rng);
  std::vector<double> norms;
  const Matrix y = nn::l2_normalize_rows(x, &norms);
  for (std::size_t r = 0; r < 3; ++r) CHECK(oracle::dot_rows(y, r, y, r) == doctest::Approx(1.0).epsilon(1e-12));
  const Matrix probe = oracle::random_matrix(3, 6, rng);
  auto loss = [&] {
    const Matrix yy = nn::l2_normalize_rows(x);
    double s = 0;
    for (std::size_t i = 0; i < yy.size(); ++i) s += yy[i] * probe[i];
    return s;
  };
  const Matrix dx = nn::l2_normalize_rows_backward(y, norms, probe);
  CHECK(oracle::fd_check(loss, x, dx, 5) < 1e-6);
}

TEST_CASE("scalar helpers are stable at the extremes") {
  CHECK(nn::sigmoid(0.0) == 0.5);
  CHECK(nn::sigmoid(-800.0) >= 0.0);
  CHECK(nn::sigmoid(800.0) == 1.0);
  CHECK(nn::softplus(800.0) == doctest::Approx(800.0));
  CHECK(nn::softplus(-800.0) >= 0.0);
  CHECK(nn::softplus(0.0) == doctest::Approx(std::log(2.0)));
  const double v[] = {1000.0, 1000.0};
  CHECK(nn::log_sum_exp(v) == doctest::Approx(1000.0 + std::log(2.0)));
  CHECK(nn::gelu(0.0) == 0.0);
  CHECK(nn::gelu(1.0) == doctest::Approx(0.8413447460685429));
  const double h = 1e-6;
  CHECK(nn::gelu_derivative(0.7) == doctest::Approx((nn::gelu(0.7 + h) - nn::gelu(0.7 - h)) / (2 * h)).epsilon(1e-8));
}

TEST_CASE("matrix helpers") {
  Matrix m(2, 3, std::vector<double>{1, 2, 3, 4, 5, 6});
  CHECK(m.transposed()(2, 1) == 6.0);
  const std::size_t rows[] = {1, 1, 0};
  const Matrix g = m.gather_rows(rows);
  CHECK(g.rows() == 3);
  CHECK(g(2, 0) == 1.0);
  CHECK_THROWS_AS(Matrix(2, 2, std::vector<double>{1.0}), ArgumentError);
  m[0] = NAN;
  CHECK_FALSE(m.all_finite());
}

TEST_CASE("seed splitting is stable and separates tags") {
  static_assert(split_seed(7, "a") == split_seed(7, "a"));
  CHECK(split_seed(7, "a") != split_seed(7, "b"));
  CHECK(split_seed(7, {1, 2}) != split_seed(7, {2, 1}));
  Rng a(9), b(9);
  CHECK(uniform(a, 0, 1) == uniform(b, 0, 1));
  Rng r(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = uniform(r, -1, 1);
    CHECK(u >= -1);
    CHECK(u < 1);
    CHECK(uniform_index(r, 7) < 7);
  }
}
