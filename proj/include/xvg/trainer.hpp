#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xvg/caption.hpp"
#include "xvg/config.hpp"
#include "xvg/model.hpp"
#include "xvg/pipeline.hpp"
#include "xvg/seed.hpp"

namespace xvg::train {

struct TrainConfig {
  double base_lr = 0.01;
  double head_lr_scale = 1.0;
  double momentum = 0.9;
  double weight_decay = 0.0005;
  int epochs = 210;
  /// (epoch, factor): from that epoch on, lr = base_lr·factor.
  std::vector<std::pair<int, double>> lr_drops = {{120, 0.1}, {180, 0.01}};
  int batch_size = 32;
  int max_steps = 0;
  int checkpoint_every = 0;
  double tau_min = 0.01;
  double tau_max = 1.0;
  double crop_min_fraction = 0.8;
  bool flip = true;
  bool freeze_encoders = false;
  bool use_text = true;
  double weather_intensity = 0.5;
  std::string satellite_text = "generated";
  std::uint64_t seed = 7;

  static TrainConfig from(const config::ExperimentConfig& c);
};

/// Piecewise-constant schedule. Throws ArgumentError outside [0, epochs).
double lr_at(const TrainConfig& cfg, int epoch);

/// v ← μ·v + (g + wd·p); p ← p − lr·v, elementwise over matching tensors.
void sgd_step(std::span<Matrix* const> params, std::span<const Matrix* const> grads, std::span<Matrix* const> velocity,
              double lr, double momentum, double weight_decay);

/// The model-level step: heads (gate, box, match, classifier) use lr·head_lr_scale,
/// encoders are skipped when frozen and τ is clamped
/// to [tau_min, tau_max] afterwards. Throws TrainingError on a non-finite gradient.
void sgd_step(model::Model& m, const model::Model& grads, model::Model& velocity, double lr, const TrainConfig& cfg);

// ---------------------------------------------------------------------------

struct Concept {
  std::string text;
  Box box;
};

struct BatchRow {
  ImageTensor image;
  std::string text;  // empty in NAN mode
  int label = 0;
  data::ViewKind view = data::ViewKind::drone;
  std::string condition;
  std::string image_ref;
  std::vector<Concept> concepts;  // region hints still inside the crop
};

/// B drone rows and the B satellite rows of the same locations, in the same order.
struct Batch {
  std::vector<BatchRow> drone;
  std::vector<BatchRow> satellite;
};

/// Picks min(batch_size, C) distinct locations, one random drone view each
/// with a uniformly drawn suite condition applied before the random
/// crop/flip; satellite views get crop/flip only. Throws ArgumentError when a
/// caption is missing in a text mode.
Batch build_batch(const pipeline::SplitData& data, const caption::CaptionIndex& captions, const TrainConfig& cfg,
                  Rng& rng);

struct StepResult {
  loss::LossComponents components;
  double total = 0.0;
};

/// Forward and backward for one batch; gradients are accumulated into
/// `grads` when given.
StepResult compute_step(const model::Model& m, const Batch& batch, model::Model* grads);

// ---------------------------------------------------------------------------

struct StepLog {
  std::uint64_t step = 0;
  int epoch = 0;
  double lr = 0.0;
  loss::LossComponents components;
  double total = 0.0;
  double tau = 0.0;

  /// "step=<n> lr=<v> itc=<v> itm=<v> la=<v> ce=<v> total=<v> tau=<v>", with
  /// NA for absent components and %.17g numbers.
  std::string line() const;
  static StepLog parse(const std::string& line);
};

struct TrainRun {
  config::ExperimentConfig experiment;
  pipeline::SplitData data;
  caption::CaptionIndex captions;
  /// Directory for train.log and ckpt_epoch_<n>.bin; empty keeps everything in memory.
  std::filesystem::path out_dir;
  std::optional<model::Checkpoint> resume;
};

struct TrainOutcome {
  model::Model model;
  model::Model velocity;
  std::vector<StepLog> history;
  std::uint64_t steps = 0;
  std::filesystem::path final_checkpoint;
};

model::ModelConfig model_config(const config::ExperimentConfig& c, int num_classes);
int steps_per_epoch(const pipeline::SplitData& data, const TrainConfig& cfg);

/// Runs the configured schedule. Every step draws its batch from a generator
/// seeded by (seed, step), so a resumed run retraces an uninterrupted one.
/// A non-finite loss aborts with TrainingError after writing ckpt_last_good.bin.
TrainOutcome train(const TrainRun& run);

model::Checkpoint make_checkpoint(const config::ExperimentConfig& c, const model::Model& m,
                                  const model::Model& velocity, std::uint64_t epoch, std::uint64_t step);

}  // namespace xvg::train
