#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "toy_fixture.hpp"
#include "xvg/error.hpp"
#include "xvg/retrieval.hpp"
#include "xvg/trainer.hpp"

using namespace xvg;
using namespace xvg::eval;

namespace {

std::vector<double> distances(std::span<const double> q, const Matrix& g) {
  std::vector<double> d;
  for (std::size_t r = 0; r < g.rows(); ++r) {
    double s = 0;
    for (std::size_t c = 0; c < g.cols(); ++c) s += (q[c] - g(r, c)) * (q[c] - g(r, c));
    d.push_back(std::sqrt(s));
  }
  return d;
}

/// Coordinates on a coarse integer lattice so exact distance ties are common.
Matrix lattice(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = static_cast<double>(uniform_index(rng, 3));
  return m;
}

}  // namespace

TEST_CASE("ranking examples") {
  const Matrix g(3, 2, {1, 0, 0, 1, 0.5, 0.5});
  const std::vector<double> self = {0, 1};
  CHECK(rank_gallery(self, g).front() == 1);
  CHECK(rank_gallery(self, Matrix(1, 2, {4, 4})) == std::vector<std::size_t>{0});
  const std::vector<double> mid = {0.5, 0.5};
  CHECK(rank_gallery(mid, g) == std::vector<std::size_t>{2, 0, 1});
  CHECK_THROWS(rank_gallery(self, Matrix(0, 2)));
}

TEST_CASE("metric examples") {
  const std::vector<std::vector<std::size_t>> top = {{0, 1}, {1, 0}};
  CHECK(recall_at_k(top, {{0}, {1}}, 1) == 100.0);
  const std::vector<std::vector<std::size_t>> four = {{0, 1}, {0, 1}, {0, 1}, {0, 1}};
  CHECK(recall_at_k(four, {{0}, {1}, {1}, {1}}, 1) == 25.0);
  CHECK(recall_at_k(four, {{0}, {1}, {1}, {1}}, 2) == 100.0);
  CHECK_THROWS_AS(recall_at_k(four, {{0}, {1}, {}, {1}}, 1), ProtocolError);

  const std::vector<std::size_t> r = {4, 2, 7, 1};
  CHECK(average_precision(r, {4}) == 1.0);
  CHECK(average_precision(std::vector<std::size_t>{3, 5}, {5}) == 0.5);
  CHECK(average_precision(r, {4, 7}) == doctest::Approx((1.0 + 2.0 / 3.0) / 2).epsilon(1e-15));
  CHECK(std::abs(average_precision(r, {4, 7}) - 0.8333) < 1e-4);
  CHECK_THROWS_AS(average_precision(r, {}), ProtocolError);
}

TEST_CASE("metrics equal exhaustive computation on small instances") {
  Rng rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t G = 1 + uniform_index(rng, 20), Q = 1 + uniform_index(rng, 10);
    const Matrix gallery = lattice(G, 3, rng), queries = lattice(Q, 3, rng);
    std::vector<std::vector<std::size_t>> ours, theirs;
    std::vector<std::set<std::size_t>> truth;
    for (std::size_t q = 0; q < Q; ++q) {
      ours.push_back(rank_gallery(queries.row(q), gallery));
      theirs.push_back(oracle::rank_by_counting(distances(queries.row(q), gallery)));
      std::set<std::size_t> t;
      const std::size_t n = 1 + uniform_index(rng, std::min<std::size_t>(G, 4));
      while (t.size() < n) t.insert(uniform_index(rng, G));
      truth.push_back(t);
    }
    CHECK(ours == theirs);
    for (int k : {1, 5, 10}) CHECK(recall_at_k(ours, truth, k) == oracle::recall(theirs, truth, k));
    CHECK(std::abs(mean_average_precision(ours, truth) - oracle::mean_ap(theirs, truth)) <= 1e-12);
    const auto row = score("x", ours, truth);
    CHECK(row.r1 <= row.r5);
    CHECK(row.r5 <= row.r10);
  }
}

TEST_CASE("permuting the gallery leaves metrics unchanged") {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t G = 12;
    const Matrix gallery = oracle::random_matrix(G, 4, rng), queries = oracle::random_matrix(6, 4, rng);
    std::vector<std::size_t> perm(G);
    for (std::size_t i = 0; i < G; ++i) perm[i] = (i * 5 + 3) % G;
    const Matrix shuffled = gallery.gather_rows(perm);
    std::vector<std::vector<std::size_t>> a, b;
    std::vector<std::set<std::size_t>> ta, tb;
    for (std::size_t q = 0; q < 6; ++q) {
      a.push_back(rank_gallery(queries.row(q), gallery));
      b.push_back(rank_gallery(queries.row(q), shuffled));
      ta.push_back({q, q + 6});
      std::set<std::size_t> t;
      for (std::size_t j = 0; j < G; ++j)
        if (perm[j] == q || perm[j] == q + 6) t.insert(j);
      tb.push_back(t);
    }
    CHECK(score("c", a, ta) == score("c", b, tb));
  }
}

TEST_CASE("reports: JSON round trip, tables and averaging") {
  RetrievalReport a;
  a.direction = "d2s";
  a.rows = {{"Normal", 50, 75, 100, 60.125}, {"Fog", 1.0 / 3, 2.0 / 3, 1, 0.7}};
  a.recompute_mean();
  CHECK(a.mean.r1 == doctest::Approx((50 + 1.0 / 3) / 2).epsilon(1e-15));
  CHECK(RetrievalReport::from_json(a.to_json()) == a);
  const auto table = a.to_table();
  CHECK(table.find("Normal") != std::string::npos);
  CHECK(table.find("Mean") != std::string::npos);
  CHECK_THROWS(RetrievalReport::from_json("{}"));

  RetrievalReport b = a;
  b.rows[0].ap = 80.125;
  b.recompute_mean();
  const auto avg = average_reports({a, b});
  CHECK(avg.rows[0].ap == 70.125);
  CHECK(avg.rows[1] == a.rows[1]);
  CHECK(avg.mean.ap == doctest::Approx((70.125 + 0.7) / 2).epsilon(1e-15));
  CHECK(delta_table(a, b).find("20.00") != std::string::npos);
  RetrievalReport c = a;
  c.direction = "s2d";
  CHECK_THROWS(average_reports({a, c}));
}

TEST_CASE("evaluation report layout on a toy model") {
  const auto cfg = fixture::tiny_config();
  const auto setup = fixture::make_setup(cfg);
  const auto m = model::Model::init(train::model_config(cfg, 4), 3);
  EvalInputs in{&m, &setup.test, &setup.captions, weather::condition_suite(), "generated", 5};
  for (Direction d : {Direction::d2s, Direction::s2d}) {
    const auto r = evaluate(in, d);
    CHECK(r.direction == to_string(d));
    REQUIRE(r.rows.size() == 10);
    CHECK(r.rows[0].condition == "Normal");
    double sum = 0;
    for (const auto& row : r.rows) {
      sum += row.r1;
      CHECK(row.r1 <= row.r5);
      CHECK(row.r5 <= row.r10);
      CHECK(row.ap >= 0.0);
      CHECK(row.ap <= 100.0);
    }
    CHECK(std::abs(r.mean.r1 - sum / 10) <= 1e-9);
    CHECK(evaluate(in, d) == r);
  }
  CHECK_THROWS(evaluate({&m, &setup.test, nullptr, weather::condition_suite(), "generated", 5}, Direction::d2s));
}
