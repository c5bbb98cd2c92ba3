#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "toy_fixture.hpp"
#include "xvg/config.hpp"
#include "xvg/error.hpp"
#include "xvg/model.hpp"
#include "xvg/trainer.hpp"

using namespace xvg;
namespace fs = std::filesystem;

TEST_CASE("config text round trips and every schema key is emitted") {
  auto c = fixture::tiny_config();
  c.base_lr = 0.1 / 3;
  c.head_lr_scale = 100;
  c.cot_steps = config::kNoText;
  c.fusion_mode = fusion::Mode::concat;
  const auto text = config::to_text(c);
  CHECK(config::to_text(config::parse_config(text)) == text);
  for (const auto& k : config::schema()) CHECK(text.find(k.key + " =") != std::string::npos);
  const auto back = config::parse_config(text);
  CHECK(back.base_lr == c.base_lr);
  CHECK(back.cot_steps == config::kNoText);
  CHECK(back.lr_drops == c.lr_drops);
}

TEST_CASE("config parsing errors") {
  CHECK_THROWS_AS(config::parse_config("train.nonsense = 1\n"), ArgumentError);
  CHECK_THROWS_AS(config::parse_config("train.base_lr = 0.1\ntrain.base_lr = 0.2\n"), ArgumentError);
  CHECK_THROWS_AS(config::parse_config("train.base_lr = fast\n"), ArgumentError);
  CHECK_THROWS_AS(config::parse_config("fusion.mode = attention\n"), ArgumentError);
  CHECK_THROWS_AS(config::parse_config("caption.cot_steps = 3\n"), ArgumentError);
  CHECK_THROWS_AS(config::parse_config("no equals sign\n"), ArgumentError);
  const auto ok = config::parse_config("# comment\n\ntrain.base_lr = 0.5  # trailing\ncaption.cot_steps = NAN\n");
  CHECK(ok.base_lr == 0.5);
  CHECK_FALSE(ok.use_text());
  auto c = fixture::tiny_config();
  config::apply_override(c, "fusion.mode", "static");
  CHECK(c.fusion_mode == fusion::Mode::static_gate);
  CHECK_THROWS_AS(config::apply_override(c, "nope", "1"), ArgumentError);
  c.reduction_ratio = 3;
  CHECK_THROWS_AS(config::validate(c), ArgumentError);
}

TEST_CASE("checkpoints round trip byte for byte and reject corruption") {
  const auto cfg = fixture::tiny_config();
  const auto m = model::Model::init(train::model_config(cfg, 4), 2);
  const auto ck = train::make_checkpoint(cfg, m, m.zeros_like(), 3, 42);
  const auto bytes = model::serialize_checkpoint(ck);
  const auto back = model::deserialize_checkpoint(bytes);
  CHECK(back.step == 42);
  CHECK(back.epoch == 3);
  CHECK(back.params == ck.params);
  CHECK(model::serialize_checkpoint(back) == bytes);

  const auto path = fs::temp_directory_path() / "xvg_checkpoint_test.bin";
  model::save_checkpoint(path, ck);
  const auto loaded = model::load_checkpoint(path);
  model::save_checkpoint(path, loaded);
  CHECK(model::serialize_checkpoint(model::load_checkpoint(path)) == bytes);
  fs::remove(path);

  auto copy = m;
  model::import_tensors(copy, back.params);
  CHECK(model::export_tensors(copy) == model::export_tensors(m));

  auto truncated = bytes;
  truncated.resize(truncated.size() / 2);
  CHECK_THROWS_AS(model::deserialize_checkpoint(truncated), StructuralError);
  auto bad_magic = bytes;
  bad_magic[0] = 'Y';
  CHECK_THROWS_AS(model::deserialize_checkpoint(bad_magic), StructuralError);
  auto bad_text = bytes;
  bad_text[30] ^= 0x20;
  CHECK_THROWS_AS(model::deserialize_checkpoint(bad_text), StructuralError);

  auto wrong = back.params;
  wrong[0].value = Matrix(1, 1);
  CHECK_THROWS_AS(model::import_tensors(copy, wrong), StructuralError);
}
