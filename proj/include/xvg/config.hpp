#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "xvg/encoders.hpp"
#include "xvg/fusion.hpp"

namespace xvg::config {

/// caption.cot_steps value of the NAN ablation (no text at all).
inline constexpr int kNoText = -1;

struct ExperimentConfig {
  std::string name = "xvg";
  std::string output_root = "runs";
  std::uint64_t seed = 7;

  std::string dataset_root = "data/dataset";
  int locations = 16;
  int drones_per_location = 4;
  int test_drones_per_location = 2;
  int image_size = 64;

  double weather_intensity = 0.5;

  std::string caption_store = "data/captions.jsonl";
  int cot_steps = 6;
  int max_retries = 3;
  std::string caption_client = "mock";

  enc::EncoderConfig encoder;  // image_size mirrors dataset.image_size
  bool freeze_encoders = false;

  fusion::Mode fusion_mode = fusion::Mode::dynamic;
  int reduction_ratio = 4;

  double base_lr = 0.01;
  double head_lr_scale = 1.0;  // gate, classifier, box and match heads
  double momentum = 0.9;
  double weight_decay = 0.0005;
  int epochs = 210;
  std::vector<std::pair<int, double>> lr_drops = {{120, 0.1}, {180, 0.01}};
  int batch_size = 32;
  int max_steps = 0;  // 0: run all epochs
  int checkpoint_every = 0;  // epochs; 0: final checkpoint only
  double tau_init = 0.07;
  double tau_min = 0.01;
  double tau_max = 1.0;

  double crop_min_fraction = 0.8;
  bool flip = true;

  std::string satellite_text = "generated";  // generated | neutral_constant

  bool use_text() const { return cot_steps != kNoText; }
};

struct KeyDoc {
  std::string key;
  std::string description;
};

/// Every accepted key with a one-line description, in canonical order.
const std::vector<KeyDoc>& schema();

/// Flat `key = value` lines; `#` starts a comment. Unknown keys, duplicate
/// keys and malformed values throw ArgumentError naming the line.
ExperimentConfig parse_config(const std::string& text);

/// Sets one key from its text form (the same parser as the file format).
void apply_override(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Canonical text: every key in schema order, doubles in shortest
/// round-trip form. parse_config(to_text(c)) reproduces c.
std::string to_text(const ExperimentConfig& cfg);

/// Cross-field checks; throws ArgumentError.
void validate(const ExperimentConfig& cfg);

std::string format_cot_steps(int steps);
int parse_cot_steps(const std::string& s);

}  // namespace xvg::config
