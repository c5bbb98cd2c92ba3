#pragma once

// A deliberately small toy setup shared by the trainer, retrieval and CLI tests.

#include "xvg/caption.hpp"
#include "xvg/config.hpp"
#include "xvg/dataset.hpp"
#include "xvg/pipeline.hpp"

namespace fixture {

inline xvg::config::ExperimentConfig tiny_config() {
  xvg::config::ExperimentConfig c;
  c.seed = 11;
  c.locations = 4;
  c.drones_per_location = 2;
  c.test_drones_per_location = 1;
  c.image_size = 16;
  c.encoder.image_size = 16;
  c.encoder.patch_size = 4;
  c.encoder.visual_hidden = 16;
  c.encoder.embed_dim = 8;
  c.encoder.token_dim = 8;
  c.encoder.joint_hidden = 8;
  c.reduction_ratio = 4;
  c.batch_size = 4;
  c.epochs = 3;
  c.lr_drops = {{1, 0.1}, {2, 0.01}};
  return c;
}

struct ToySetup {
  xvg::data::ToyWorld world;
  xvg::pipeline::SplitData train, test;
  xvg::caption::CaptionIndex captions;
};

inline ToySetup make_setup(const xvg::config::ExperimentConfig& c) {
  ToySetup s;
  s.world = xvg::data::generate_toy_world(c.seed, c.locations, c.drones_per_location);
  s.train = xvg::pipeline::render_split(s.world, xvg::data::Split::train, c.drones_per_location, c.image_size);
  s.test = xvg::pipeline::render_split(s.world, xvg::data::Split::test, c.test_drones_per_location, c.image_size);
  xvg::pipeline::CaptionOptions o;
  o.cot_steps = c.use_text() ? c.cot_steps : 6;
  o.seed = c.seed;
  for (const auto* split : {&s.train, &s.test})
    for (const auto& r : xvg::pipeline::generate_split_captions(*split, &s.world, o)) s.captions.insert(r);
  return s;
}

}  // namespace fixture
