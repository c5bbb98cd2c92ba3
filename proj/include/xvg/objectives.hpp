#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xvg/box.hpp"
#include "xvg/matrix.hpp"

namespace xvg::loss {

// ---------------------------------------------------------------------------
// Image-text contrastive

/// S[i][j] = I_i·T_j / tau. Throws ArgumentError unless tau > 0 and the
/// batches agree in shape.
Matrix similarity_matrix(const Matrix& image, const Matrix& text, double tau);

struct ItcResult {
  double loss = 0.0;
  Matrix dS;  // ∂L/∂S
};

/// Symmetric softmax loss over the diagonal of S. B < 2 throws.
ItcResult itc_from_similarity(const Matrix& S);

struct ItcGrads {
  double loss = 0.0;
  Matrix d_image, d_text;
  double d_tau = 0.0;
};
ItcGrads itc_loss(const Matrix& image, const Matrix& text, double tau);

// ---------------------------------------------------------------------------
// Image-text matching

struct HardNegatives {
  std::vector<std::size_t> text;   // text[i] = argmax_{j≠i} S[i][j]
  std::vector<std::size_t> image;  // image[i] = argmax_{j≠i} S[j][i]
};

/// Off-diagonal argmax per row and per column; ties go to the smaller index.
HardNegatives mine_hard_negatives(const Matrix& S);

/// The 3B (image, text) index pairs: B positives (i, i) labeled 1, then
/// (i, text[i]) and (image[i], i) labeled 0.
struct ItmPairs {
  std::vector<std::size_t> image, text;
  std::vector<int> label;
};
ItmPairs build_itm_pairs(const HardNegatives& negatives);

struct MatchParams {
  Matrix w;  // 1×d
  Matrix b;  // 1×1

  static MatchParams init(int d, std::uint64_t seed);
};

struct ItmResult {
  double loss = 0.0;
  Matrix dH;
};

/// Mean binary cross-entropy over the 3B joint vectors, computed through
/// softplus. Throws unless the pair count is a multiple of 3 and exactly a
/// third of the labels are 1.
ItmResult itm_loss(const MatchParams& p, const Matrix& h, std::span<const int> labels, MatchParams* grads);

// ---------------------------------------------------------------------------
// Localized alignment

struct LocParams {
  Matrix w1;  // 2d×d
  Matrix b1;  // 1×2d
  Matrix w2;  // 4×2d
  Matrix b2;  // 1×4

  static LocParams init(int d, std::uint64_t seed);
  static LocParams zeros(int d);
};

struct BoxHeadCache {
  Matrix pre, hidden, out;
};

/// l̂ = sigmoid(W2·GELU(W1·x + b1) + b2), one (c_x, c_y, w, h) row per input
/// row; GELU is the exact x·Φ(x).
Matrix box_head_forward(const LocParams& p, const Matrix& x, BoxHeadCache* cache = nullptr);
Matrix box_head_backward(const LocParams& p, const Matrix& x, const BoxHeadCache& cache, const Matrix& dl,
                         LocParams& grads);

/// Intersection over union of center-size boxes; 0 when the union is empty.
double iou(const Box& a, const Box& b);

struct IouGrad {
  double value = 0.0;
  std::array<double, 4> d_pred{};  // ∂IoU/∂(c_x, c_y, w, h) of the prediction
};

/// Piecewise analytic derivative. Where the prediction's edge coincides with
/// the ground truth's, the prediction edge is treated as the binding one,
/// and boxes that touch with zero overlap take the overlapping branch.
IouGrad iou_with_grad(const Box& truth, const Box& pred);

struct LaResult {
  double loss = 0.0;
  Matrix dX;
};

/// Mean over concepts of (1 − IoU) + ‖l − l̂‖₁. Throws ArgumentError on an
/// invalid ground-truth box or an empty concept list.
LaResult la_loss(const LocParams& p, const Matrix& x, std::span<const Box> truth, LocParams* grads);

// ---------------------------------------------------------------------------
// Classification

struct ClfParams {
  Matrix w;  // C×D (C×2D in concat mode)
  Matrix b;  // 1×C

  static ClfParams init(int classes, int width, std::uint64_t seed);
};

struct CeResult {
  double loss = 0.0;
  Matrix dZ;
};

CeResult ce_loss(const ClfParams& p, const Matrix& z, std::span<const int> labels, ClfParams* grads);

// ---------------------------------------------------------------------------

/// Absent components (NAN mode) stay empty and are skipped.
struct LossComponents {
  std::optional<double> itc, itm, la;
  double ce = 0.0;
};

/// Unweighted sum. Throws TrainingError naming the first non-finite component.
double total_loss(const LossComponents& c);

}  // namespace xvg::loss
