#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "xvg/error.hpp"
#include "xvg/objectives.hpp"

using namespace xvg;
using namespace xvg::loss;

namespace {

Matrix orthonormal(std::size_t B, std::size_t D) {
  Matrix m(B, D);
  for (std::size_t i = 0; i < B; ++i) m(i, i) = 1.0;
  return m;
}

double weighted_sum(const Matrix& a, const Matrix& c) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * c[i];
  return s;
}

/// sigmoid(W2·GELU(W1 x + b1) + b2) with GELU(u) = u·(1 + erf(u/√2))/2.
Matrix box_oracle(const LocParams& p, const Matrix& x) {
  Matrix out(x.rows(), 4);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    std::vector<double> h(p.w1.rows());
    for (std::size_t k = 0; k < h.size(); ++k) {
      double u = p.b1(0, k);
      for (std::size_t c = 0; c < x.cols(); ++c) u += p.w1(k, c) * x(r, c);
      h[k] = u * 0.5 * (1.0 + std::erf(u / std::numbers::sqrt2));
    }
    for (std::size_t o = 0; o < 4; ++o) {
      double a = p.b2(0, o);
      for (std::size_t k = 0; k < h.size(); ++k) a += p.w2(o, k) * h[k];
      out(r, o) = 1.0 / (1.0 + std::exp(-a));
    }
  }
  return out;
}

LocParams random_loc(int d, Rng& rng) {
  auto p = LocParams::zeros(d);
  p.w1 = oracle::random_matrix(p.w1.rows(), p.w1.cols(), rng);
  p.b1 = oracle::random_matrix(1, p.b1.cols(), rng);
  p.w2 = oracle::random_matrix(p.w2.rows(), p.w2.cols(), rng);
  p.b2 = oracle::random_matrix(1, p.b2.cols(), rng);
  return p;
}

Box random_box(Rng& rng) {
  return {uniform(rng, 0.2, 0.8), uniform(rng, 0.2, 0.8), uniform(rng, 0.05, 0.4), uniform(rng, 0.05, 0.4)};
}

}  // namespace

TEST_CASE("similarity matrix") {
  const Matrix S = similarity_matrix(orthonormal(3, 4), orthonormal(3, 4), 1.0);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(S(i, j) == (i == j ? 1.0 : 0.0));
  Rng rng(1);
  const Matrix I = oracle::random_unit_rows(3, 5, rng), T = oracle::random_unit_rows(3, 5, rng);
  const Matrix s1 = similarity_matrix(I, T, 1.0), s2 = similarity_matrix(I, T, 0.5);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(s2(i, j) == doctest::Approx(2 * s1(i, j)).epsilon(1e-14));
      CHECK(std::abs(s1(i, j) - oracle::dot_rows(I, i, T, j)) <= 1e-14);
    }
  CHECK_THROWS_AS(similarity_matrix(I, T, 0.0), ArgumentError);
  CHECK_THROWS_AS(similarity_matrix(I, Matrix(2, 5), 1.0), ArgumentError);
}

TEST_CASE("ITC examples, symmetry and oracle agreement") {
  const double expected = -std::log(std::numbers::e / (std::numbers::e + 1.0));
  CHECK(std::abs(itc_loss(orthonormal(2, 3), orthonormal(2, 3), 1.0).loss - expected) <= 1e-12);
  CHECK(std::abs(expected - 0.313262) <= 1e-6);
  CHECK(std::abs(itc_from_similarity(Matrix(4, 4, 0.3)).loss - std::log(4.0)) <= 1e-12);
  Matrix sharp(3, 3);
  for (std::size_t i = 0; i < 3; ++i) sharp(i, i) = 60.0;
  CHECK(itc_from_similarity(sharp).loss <= 1e-20);
  CHECK_THROWS_AS(itc_from_similarity(Matrix(1, 1)), ArgumentError);

  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    const Matrix I = oracle::random_unit_rows(4, 6, rng), T = oracle::random_unit_rows(4, 6, rng);
    const double tau = uniform(rng, 0.05, 1.0);
    const double l = itc_loss(I, T, tau).loss;
    CHECK(std::abs(l - oracle::itc(I, T, tau)) <= 1e-10);
    CHECK(std::abs(l - itc_loss(T, I, tau).loss) <= 1e-12);
    CHECK(l >= 0.0);
  }
}

TEST_CASE("ITC gradients including temperature") {
  Rng rng(3);
  Matrix I = oracle::random_unit_rows(4, 8, rng), T = oracle::random_unit_rows(4, 8, rng);
  Matrix tau(1, 1, 0.2);
  auto loss = [&] { return itc_loss(I, T, tau[0]).loss; };
  const auto g = itc_loss(I, T, tau[0]);
  CHECK(oracle::fd_check(loss, I, g.d_image, 1) <= 1e-5);
  CHECK(oracle::fd_check(loss, T, g.d_text, 2) <= 1e-5);
  CHECK(oracle::fd_check(loss, tau, Matrix(1, 1, g.d_tau), 3) <= 1e-5);
}

TEST_CASE("hard negatives") {
  const Matrix S(2, 2, {5, 1, 3, 4});
  const auto n = mine_hard_negatives(S);
  CHECK(n.text == std::vector<std::size_t>{1, 0});
  CHECK(n.image == std::vector<std::size_t>{1, 0});

  Matrix dominant(3, 3, 0.1);
  for (std::size_t i = 0; i < 3; ++i) dominant(i, i) = 9.0;
  const auto d = mine_hard_negatives(dominant);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(d.text[i] != i);
    CHECK(d.image[i] != i);
    CHECK(d.text[i] == (i == 0 ? 1u : 0u));
  }
  const Matrix tie(3, 3, {0, 2, 2, 7, 0, 7, 1, 1, 0});
  const auto t = mine_hard_negatives(tie);
  CHECK(t.text[0] == 1);
  CHECK(t.text[1] == 0);
  CHECK(t.text[2] == 0);
  CHECK_THROWS_AS(mine_hard_negatives(Matrix(1, 1)), ArgumentError);

  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t B = 2 + uniform_index(rng, 4);
    Matrix R(B, B);
    for (std::size_t i = 0; i < R.size(); ++i) R[i] = static_cast<double>(uniform_index(rng, 3));
    const auto a = mine_hard_negatives(R);
    const auto o = oracle::hard_negatives(R);
    CHECK(a.text == o.text);
    CHECK(a.image == o.image);
  }
}

TEST_CASE("ITM pairs and loss") {
  const auto pairs = build_itm_pairs({{1, 0, 0}, {2, 2, 1}});
  REQUIRE(pairs.label.size() == 9);
  CHECK(std::count(pairs.label.begin(), pairs.label.end(), 1) == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(pairs.image[i] == i);
    CHECK(pairs.text[i] == i);
  }

  MatchParams zero{Matrix(1, 4), Matrix(1, 1)};
  Rng rng(5);
  const Matrix h = oracle::random_matrix(6, 4, rng);
  const std::vector<int> labels = {1, 1, 0, 0, 0, 0};
  CHECK(std::abs(itm_loss(zero, h, labels, nullptr).loss - std::log(2.0)) <= 1e-12);

  MatchParams sat{Matrix(1, 1, 1.0), Matrix(1, 1)};
  const Matrix logits(6, 1, {20, 20, -20, -20, -20, -20});
  CHECK(itm_loss(sat, logits, labels, nullptr).loss <= 1e-8);
  const Matrix huge(6, 1, {800, 900, -800, -900, -750, -1000});
  CHECK(std::isfinite(itm_loss(sat, huge, labels, nullptr).loss));

  const std::vector<int> bad = {1, 1, 1, 0, 0, 0};
  CHECK_THROWS_AS(itm_loss(zero, h, bad, nullptr), ArgumentError);
  CHECK_THROWS_AS(itm_loss(zero, Matrix(5, 4), std::vector<int>{1, 0, 0, 0, 0}, nullptr), ArgumentError);

  for (int t = 0; t < 20; ++t) {
    auto p = MatchParams::init(4, 10 + t);
    p.b = Matrix(1, 1, uniform(rng, -1, 1));
    const Matrix hh = oracle::random_matrix(6, 4, rng, -2, 2);
    CHECK(std::abs(itm_loss(p, hh, labels, nullptr).loss - oracle::itm(p.w, p.b[0], hh, labels)) <= 1e-10);
  }

  auto p = MatchParams::init(4, 3);
  Matrix hh = oracle::random_matrix(6, 4, rng);
  MatchParams grads{Matrix(1, 4), Matrix(1, 1)};
  const auto r = itm_loss(p, hh, labels, &grads);
  auto loss = [&] { return itm_loss(p, hh, labels, nullptr).loss; };
  CHECK(oracle::fd_check(loss, p.w, grads.w, 1) <= 1e-5);
  CHECK(oracle::fd_check(loss, p.b, grads.b, 2) <= 1e-5);
  CHECK(oracle::fd_check(loss, hh, r.dH, 3) <= 1e-5);
}

TEST_CASE("box head") {
  const Matrix x(2, 4, {0.3, -1, 2, 0.5, 1, 1, 1, 1});
  const Matrix half = box_head_forward(LocParams::zeros(4), x);
  for (double v : half.values()) CHECK(v == 0.5);
  auto sat = LocParams::zeros(4);
  sat.b2 = Matrix(1, 4, {20, 20, -20, -20});
  const Matrix s = box_head_forward(sat, x);
  for (std::size_t r = 0; r < 2; ++r) {
    CHECK(std::abs(s(r, 0) - 1) <= 1e-8);
    CHECK(std::abs(s(r, 1) - 1) <= 1e-8);
    CHECK(s(r, 2) <= 1e-8);
    CHECK(s(r, 3) <= 1e-8);
  }
  Rng rng(6);
  const auto p = random_loc(4, rng);
  CHECK(p.w1.rows() == 8);
  CHECK(p.w2.rows() == 4);
  const Matrix y = box_head_forward(p, x), o = box_oracle(p, x);
  for (std::size_t i = 0; i < y.size(); ++i) {
    CHECK(std::abs(y[i] - o[i]) <= 1e-13);
    CHECK(y[i] > 0.0);
    CHECK(y[i] < 1.0);
  }
}

TEST_CASE("IoU examples, properties, raster agreement and gradient") {
  const Box a{0.5, 0.5, 0.4, 0.4}, b{0.6, 0.5, 0.4, 0.4};
  CHECK(std::abs(iou(a, b) - 0.6) <= 1e-12);
  CHECK(std::abs(oracle::raster_iou(a, b) - 0.6) <= 2e-3);
  CHECK(iou(a, a) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(iou(a, {0.9, 0.9, 0.1, 0.1}) == 0.0);
  CHECK(iou({0.5, 0.5, 0, 0}, {0.5, 0.5, 0, 0}) == 0.0);

  Rng rng(7);
  for (int t = 0; t < 40; ++t) {
    const Box p = random_box(rng), q = random_box(rng);
    const double v = iou(p, q);
    CHECK(v == iou(q, p));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    // Grid error grows as boxes shrink relative to the pitch; compare on boxes of side >= 0.2.
    auto enlarge = [](const Box& b) {
      const double w = b.w + 0.2, h = b.h + 0.2;
      return Box{std::clamp(b.cx, w / 2, 1 - w / 2), std::clamp(b.cy, h / 2, 1 - h / 2), w, h};
    };
    const Box big_p = enlarge(p), big_q = enlarge(q);
    CHECK(std::abs(iou(big_p, big_q) - oracle::raster_iou(big_p, big_q)) <= 2e-3);
  }

  for (int t = 0; t < 20; ++t) {
    const Box truth = random_box(rng);
    Box pred = truth;
    pred.cx += uniform(rng, -0.05, 0.05);
    pred.cy += uniform(rng, -0.05, 0.05);
    pred.w *= uniform(rng, 0.7, 1.3);
    pred.h *= uniform(rng, 0.7, 1.3);
    const auto g = iou_with_grad(truth, pred);
    CHECK(g.value == doctest::Approx(iou(truth, pred)).epsilon(1e-14));
    Matrix coords(1, 4, {pred.cx, pred.cy, pred.w, pred.h});
    const Matrix grad(1, 4, {g.d_pred[0], g.d_pred[1], g.d_pred[2], g.d_pred[3]});
    auto f = [&] { return iou(truth, {coords[0], coords[1], coords[2], coords[3]}); };
    CHECK(oracle::fd_check(f, coords, grad, t) <= 1e-5);
  }
}

TEST_CASE("localized alignment loss") {
  const Box truth{0.25, 0.25, 0.1, 0.1};
  // The head can be driven to an exact box by zero weights and logit biases.
  auto exact = LocParams::zeros(4);
  auto logit = [](double p) { return std::log(p / (1 - p)); };
  exact.b2 = Matrix(1, 4, {logit(0.25), logit(0.25), logit(0.1), logit(0.1)});
  const Matrix x(1, 4, 0.7);
  const std::vector<Box> one = {truth};
  CHECK(la_loss(exact, x, one, nullptr).loss <= 1e-12);

  auto far = LocParams::zeros(4);
  far.b2 = Matrix(1, 4, {logit(0.75), logit(0.75), logit(0.1), logit(0.1)});
  CHECK(std::abs(la_loss(far, x, one, nullptr).loss - 2.0) <= 1e-12);

  CHECK_THROWS_AS(la_loss(far, x, std::vector<Box>{{0.5, 0.5, 1.5, 0.2}}, nullptr), ArgumentError);
  CHECK_THROWS_AS(la_loss(far, Matrix(0, 4), std::vector<Box>{}, nullptr), ArgumentError);

  Rng rng(8);
  auto p = random_loc(6, rng);
  for (double& v : p.w2.values()) v *= 0.3;
  Matrix xs = oracle::random_matrix(3, 6, rng, -0.5, 0.5);
  const std::vector<Box> boxes = {{0.5, 0.5, 0.5, 0.5}, {0.45, 0.55, 0.6, 0.4}, {0.5, 0.5, 0.3, 0.7}};
  auto grads = LocParams::zeros(6);
  const auto r = la_loss(p, xs, boxes, &grads);
  auto loss = [&] { return la_loss(p, xs, boxes, nullptr).loss; };
  CHECK(oracle::fd_check(loss, p.w1, grads.w1, 1) <= 1e-5);
  CHECK(oracle::fd_check(loss, p.b1, grads.b1, 2) <= 1e-5);
  CHECK(oracle::fd_check(loss, p.w2, grads.w2, 3) <= 1e-5);
  CHECK(oracle::fd_check(loss, p.b2, grads.b2, 4) <= 1e-5);
  CHECK(oracle::fd_check(loss, xs, r.dX, 5) <= 1e-5);
}

TEST_CASE("classification loss") {
  ClfParams uniform_head{Matrix(10, 4), Matrix(1, 10)};
  const Matrix z(3, 4, 0.25);
  const std::vector<int> labels = {0, 4, 9};
  CHECK(std::abs(ce_loss(uniform_head, z, labels, nullptr).loss - std::log(10.0)) <= 1e-12);

  ClfParams onehot{Matrix(3, 2), Matrix(1, 3, {20, -20, -20})};
  CHECK(ce_loss(onehot, Matrix(2, 2), std::vector<int>{0, 0}, nullptr).loss <= 1e-8);
  CHECK_THROWS_AS(ce_loss(onehot, Matrix(1, 2), std::vector<int>{3}, nullptr), ArgumentError);
  CHECK_THROWS_AS(ce_loss(onehot, Matrix(1, 2), std::vector<int>{-1}, nullptr), ArgumentError);

  Rng rng(9);
  for (int t = 0; t < 20; ++t) {
    auto p = ClfParams::init(5, 4, 30 + t);
    p.b = oracle::random_matrix(1, 5, rng);
    const Matrix zz = oracle::random_matrix(3, 4, rng);
    const std::vector<int> y = {static_cast<int>(uniform_index(rng, 5)), static_cast<int>(uniform_index(rng, 5)),
                                static_cast<int>(uniform_index(rng, 5))};
    CHECK(std::abs(ce_loss(p, zz, y, nullptr).loss - oracle::ce(p.w, p.b, zz, y)) <= 1e-10);
  }

  auto p = ClfParams::init(5, 8, 2);
  Matrix zz = oracle::random_matrix(4, 8, rng);
  const std::vector<int> y = {0, 3, 3, 4};
  ClfParams grads{Matrix(5, 8), Matrix(1, 5)};
  const auto r = ce_loss(p, zz, y, &grads);
  auto loss = [&] { return ce_loss(p, zz, y, nullptr).loss; };
  CHECK(oracle::fd_check(loss, p.w, grads.w, 1) <= 1e-5);
  CHECK(oracle::fd_check(loss, p.b, grads.b, 2) <= 1e-5);
  CHECK(oracle::fd_check(loss, zz, r.dZ, 3) <= 1e-5);
}

TEST_CASE("total loss") {
  CHECK(total_loss({0.3, 0.7, 2.0, 2.3}) == doctest::Approx(5.3).epsilon(1e-15));
  CHECK(total_loss({std::nullopt, std::nullopt, std::nullopt, 1.25}) == 1.25);
  CHECK_THROWS_AS(total_loss({0.3, std::nan(""), 2.0, 2.3}), TrainingError);
  CHECK_THROWS_AS(total_loss({0.3, 0.7, 2.0, INFINITY}), TrainingError);
  try {
    total_loss({0.3, std::nan(""), 2.0, 2.3});
  } catch (const TrainingError& e) {
    CHECK(std::string(e.what()).find("itm") != std::string::npos);
  }
}
