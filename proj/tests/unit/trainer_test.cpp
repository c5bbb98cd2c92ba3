#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>

#include "oracles.hpp"
#include "toy_fixture.hpp"
#include "xvg/error.hpp"
#include "xvg/trainer.hpp"

using namespace xvg;
using namespace xvg::train;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("xvg_trainer_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("learning-rate schedule") {
  TrainConfig cfg;
  cfg.base_lr = 0.02;
  CHECK(lr_at(cfg, 0) == 0.02);
  CHECK(lr_at(cfg, 119) == 0.02);
  CHECK(lr_at(cfg, 120) == 0.02 * 0.1);
  CHECK(lr_at(cfg, 179) == 0.02 * 0.1);
  CHECK(lr_at(cfg, 180) == 0.02 * 0.01);
  CHECK(lr_at(cfg, 209) == 0.02 * 0.01);
  CHECK_THROWS_AS(lr_at(cfg, 210), ArgumentError);
  CHECK_THROWS_AS(lr_at(cfg, -1), ArgumentError);
}

TEST_CASE("SGD examples") {
  Matrix p(1, 3, {1.0, -2.0, 0.5}), v(1, 3);
  const Matrix g(1, 3, {0.5, 0.25, -1.0});
  Matrix* ps[] = {&p};
  const Matrix* gs[] = {&g};
  Matrix* vs[] = {&v};

  sgd_step(ps, gs, vs, 0.1, 0.0, 0.0);
  CHECK(p == Matrix(1, 3, {1.0 - 0.05, -2.0 - 0.025, 0.5 + 0.1}));

  Matrix q(1, 3), w(1, 3);
  Matrix* qs[] = {&q};
  Matrix* ws[] = {&w};
  sgd_step(qs, gs, ws, 0.1, 0.9, 0.0);
  sgd_step(qs, gs, ws, 0.1, 0.9, 0.0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(q[i] == doctest::Approx(-0.1 * g[i] * 2.9).epsilon(1e-14));

  Matrix r(1, 1, 2.0), rv(1, 1);
  const Matrix zero(1, 1);
  Matrix* rs[] = {&r};
  const Matrix* zs[] = {&zero};
  Matrix* rvs[] = {&rv};
  sgd_step(rs, zs, rvs, 0.5, 0.0, 0.1);
  CHECK(r[0] == doctest::Approx(2.0 * (1 - 0.05)).epsilon(1e-15));
}

TEST_CASE("model step clamps temperature and rejects non-finite gradients") {
  auto cfg = fixture::tiny_config();
  auto m = model::Model::init(model_config(cfg, 4), 1);
  auto grads = m.zeros_like(), vel = m.zeros_like();
  TrainConfig tc = TrainConfig::from(cfg);
  grads.tau[0] = -1000.0;
  sgd_step(m, grads, vel, 0.1, tc);
  CHECK(m.tau[0] == tc.tau_max);
  grads = m.zeros_like();
  grads.clf.w[0] = std::nan("");
  CHECK_THROWS_AS(sgd_step(m, grads, vel, 0.1, tc), TrainingError);
}

TEST_CASE("batches: distinct locations, determinism, NAN mode and condition frequencies") {
  const auto cfg = fixture::tiny_config();
  const auto setup = fixture::make_setup(cfg);
  TrainConfig tc = TrainConfig::from(cfg);

  Rng a(5), b(5);
  const Batch x = build_batch(setup.train, setup.captions, tc, a);
  const Batch y = build_batch(setup.train, setup.captions, tc, b);
  REQUIRE(x.drone.size() == 4);
  REQUIRE(x.satellite.size() == 4);
  std::set<int> labels;
  for (std::size_t i = 0; i < 4; ++i) {
    labels.insert(x.drone[i].label);
    CHECK(x.drone[i].label == x.satellite[i].label);
    CHECK(x.drone[i].image == y.drone[i].image);
    CHECK(x.drone[i].text == y.drone[i].text);
    CHECK(x.drone[i].condition == y.drone[i].condition);
    CHECK_FALSE(x.drone[i].text.empty());
  }
  CHECK(labels.size() == 4);

  TrainConfig nan = tc;
  nan.use_text = false;
  Rng c(5);
  for (const auto& row : build_batch(setup.train, caption::CaptionIndex{}, nan, c).drone) CHECK(row.text.empty());
  Rng d(5);
  CHECK_THROWS_AS(build_batch(setup.train, caption::CaptionIndex{}, tc, d), ArgumentError);

  std::map<std::string, int> counts;
  Rng rng(99);
  int draws = 0;
  while (draws < 1000) {
    for (const auto& row : build_batch(setup.train, setup.captions, tc, rng).drone) {
      ++counts[row.condition];
      ++draws;
    }
  }
  REQUIRE(counts.size() == 10);
  double chi2 = 0;
  for (const auto& [name, n] : counts) chi2 += (n - draws / 10.0) * (n - draws / 10.0) / (draws / 10.0);
  // 99.9th percentile of chi-square with 9 degrees of freedom.
  CHECK(chi2 < 27.88);
}

TEST_CASE("step log lines round trip and total equals the component sum") {
  StepLog s;
  s.step = 12;
  s.epoch = 1;
  s.lr = 0.001;
  s.components = {0.1 / 3, std::nullopt, 1.0 / 7, 2.5};
  s.total = loss::total_loss(s.components);
  s.tau = 0.0712345678901234;
  const auto p = StepLog::parse(s.line());
  CHECK(p.step == 12);
  CHECK(p.lr == s.lr);
  CHECK(p.components.itc == s.components.itc);
  CHECK_FALSE(p.components.itm.has_value());
  CHECK(p.components.la == s.components.la);
  CHECK(p.total == s.total);
  CHECK(p.tau == s.tau);
  CHECK_THROWS(StepLog::parse("step=abc"));
}

TEST_CASE("training is deterministic and a resumed run retraces the uninterrupted one") {
  auto cfg = fixture::tiny_config();
  cfg.checkpoint_every = 1;
  const auto setup = fixture::make_setup(cfg);
  TrainRun run{cfg, setup.train, setup.captions, scratch_dir("full"), std::nullopt};
  const auto full = train::train(run);
  REQUIRE(full.steps == 6);
  for (const auto& h : full.history) {
    const double sum = *h.components.itc + *h.components.itm + *h.components.la + h.components.ce;
    CHECK(std::abs(h.total - sum) <= 1e-9);
  }

  TrainRun again = run;
  again.out_dir.clear();
  const auto second = train::train(again);
  CHECK(model::export_tensors(full.model) == model::export_tensors(second.model));

  TrainRun resumed = run;
  resumed.out_dir = scratch_dir("resumed");
  resumed.resume = model::load_checkpoint(run.out_dir / "ckpt_epoch_1.bin");
  CHECK(resumed.resume->step == 2);
  const auto tail = train::train(resumed);
  CHECK(model::export_tensors(full.model) == model::export_tensors(tail.model));
  CHECK(model::export_tensors(full.velocity) == model::export_tensors(tail.velocity));
  CHECK(model::serialize_checkpoint(model::load_checkpoint(run.out_dir / "ckpt_epoch_3.bin")) ==
        model::serialize_checkpoint(model::load_checkpoint(resumed.out_dir / "ckpt_epoch_3.bin")));

  auto other = cfg;
  other.base_lr = 0.5;
  TrainRun mismatch{other, setup.train, setup.captions, {}, resumed.resume};
  CHECK_THROWS_AS(train::train(mismatch), StructuralError);
  fs::remove_all(run.out_dir);
  fs::remove_all(resumed.out_dir);
}
