#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "xvg/encoders.hpp"
#include "xvg/fusion.hpp"
#include "xvg/objectives.hpp"

namespace xvg::model {

struct ModelConfig {
  enc::EncoderConfig encoder;
  fusion::Mode fusion = fusion::Mode::dynamic;
  int reduction_ratio = 4;
  int num_classes = 1;
  /// False in the NAN ablation: no text branch, f_fuse = f_I.
  bool use_text = true;
  double tau_init = 0.07;
};

/// Every trainable tensor of the system. The same type doubles as the
/// gradient and momentum buffer layout.
struct Model {
  ModelConfig config;
  enc::EncoderParams encoder;
  fusion::GateParams gate;
  loss::LocParams loc;
  loss::ClfParams clf;
  loss::MatchParams match;
  Matrix tau;  // 1×1

  static Model init(const ModelConfig& cfg, std::uint64_t seed);
  Model zeros_like() const;

  /// Width of the classifier input: D, or 2D in concat mode with text.
  int fused_width() const;

  /// Visits tensors in a fixed order with stable names.
  void for_each(const std::function<void(const std::string&, Matrix&)>& f);
  void for_each(const std::function<void(const std::string&, const Matrix&)>& f) const;
};

/// Classifier input for a batch: f_I (no text), [f_I, f_T] (concat), or the
/// gated convex mix.
Matrix fused_features(const Model& m, std::span<const ImageTensor> images, std::span<const std::string> texts);

/// Row-normalized fused features, the embedding ranked at retrieval time.
Matrix retrieval_embedding(const Model& m, std::span<const ImageTensor> images, std::span<const std::string> texts);

// ---------------------------------------------------------------------------
// Checkpoints (little-endian binary):
//   "XVGCKPT1"            8-byte magic
//   u32 version           currently 1
//   u64 n, n bytes        canonical experiment config text
//   u64                   config fingerprint (FNV-1a of the text)
//   u64 epoch, u64 step   progress when written
//   u32 count, then per tensor: u32 name length, name, u64 rows, u64 cols,
//                         rows·cols f64 values      (parameters)
//   u32 count, tensors    same layout               (momentum buffers)

struct NamedTensor {
  std::string name;
  Matrix value;
  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

struct Checkpoint {
  std::string config_text;
  std::uint64_t fingerprint = 0;
  std::uint64_t epoch = 0;
  std::uint64_t step = 0;
  std::vector<NamedTensor> params;
  std::vector<NamedTensor> momentum;
};

std::vector<NamedTensor> export_tensors(const Model& m);
/// Copies tensors into `m`; throws StructuralError on a missing name or shape mismatch.
void import_tensors(Model& m, const std::vector<NamedTensor>& tensors);

std::vector<unsigned char> serialize_checkpoint(const Checkpoint& c);
Checkpoint deserialize_checkpoint(std::span<const unsigned char> bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace xvg::model
