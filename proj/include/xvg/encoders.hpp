#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "xvg/image.hpp"
#include "xvg/matrix.hpp"

namespace xvg::enc {

inline constexpr int kVocabBuckets = 4096;

struct EncoderConfig {
  int image_size = 64;
  int patch_size = 8;
  int visual_hidden = 64;
  int embed_dim = 32;  // D
  int token_dim = 32;
  int joint_hidden = 32;
  int joint_dim = 0;  // d; 0 means D

  int pooled_dim() const { return (image_size / patch_size) * (image_size / patch_size) * 3; }
  int resolved_joint_dim() const { return joint_dim > 0 ? joint_dim : embed_dim; }
  void validate() const;
};

/// Visual stack: patch means → Linear → tanh → Linear (u) → L2 normalize (f_I).
/// Text stack: hashed token embeddings, mean-pooled → Linear (v) → L2 normalize (f_T).
/// Joint stack: [u; v] → Linear → tanh → Linear → tanh (x_cls).
struct EncoderParams {
  EncoderConfig config;
  Matrix vis_w1, vis_b1, vis_w2, vis_b2;
  Matrix tok_embed, txt_w, txt_b;
  Matrix joint_w1, joint_b1, joint_w2, joint_b2;

  static EncoderParams init(const EncoderConfig& cfg, std::uint64_t seed);
  /// Same shapes, all zeros (gradient or momentum buffers).
  EncoderParams zeros_like() const;
  void for_each(const std::function<void(const std::string&, Matrix&)>& f);
  void for_each(const std::function<void(const std::string&, const Matrix&)>& f) const;
};

// ---------------------------------------------------------------------------
// Visual

/// Non-overlapping patch means, centered to [-1, 1]; one row per image.
Matrix patch_pool(std::span<const ImageTensor> images, int patch_size);

struct VisualCache {
  Matrix pooled, hidden, u, f;
  std::vector<double> norms;
};

/// B×D unit rows. Throws ArgumentError when the images differ in shape or do
/// not match the configured size.
Matrix encode_image(const EncoderParams& p, std::span<const ImageTensor> images, VisualCache* cache = nullptr);

/// Accumulates parameter gradients given ∂L/∂f_I and, optionally, ∂L/∂u.
void encode_image_backward(const EncoderParams& p, const VisualCache& cache, const Matrix& df, const Matrix* du,
                           EncoderParams& grads);

// ---------------------------------------------------------------------------
// Text

/// Lowercased alphanumeric tokens mapped to bucket ids.
std::vector<int> tokenize(const std::string& text);

struct TextCache {
  std::vector<std::vector<int>> tokens;
  Matrix pooled, v, f;
  std::vector<double> norms;
};

/// B×D unit rows. Throws ArgumentError on a string without tokens.
Matrix encode_text(const EncoderParams& p, std::span<const std::string> texts, TextCache* cache = nullptr);

void encode_text_backward(const EncoderParams& p, const TextCache& cache, const Matrix& df, const Matrix* dv,
                          EncoderParams& grads);

// ---------------------------------------------------------------------------
// Joint

struct JointCache {
  Matrix input, hidden, x;
};

/// Row n of the result is x_cls for the pair (u row n, v row n).
Matrix encode_joint(const EncoderParams& p, const Matrix& u, const Matrix& v, JointCache* cache = nullptr);

struct JointGrads {
  Matrix du, dv;
};
JointGrads encode_joint_backward(const EncoderParams& p, const JointCache& cache, const Matrix& dx,
                                 EncoderParams& grads);

/// x_cls for one (image, text) pair.
std::vector<double> encode_joint(const EncoderParams& p, const ImageTensor& image, const std::string& text);

}  // namespace xvg::enc
