#pragma once

#include <cstdint>
#include <string>

#include "xvg/matrix.hpp"

namespace xvg::fusion {

enum class Mode { concat, static_gate, dynamic };

std::string to_string(Mode m);
Mode parse_mode(const std::string& s);

/// Channel gate g = sigmoid(W2·ReLU(W1·f_T + b1) + b2), W1 (D/r)×D, W2 D×(D/r).
struct GateParams {
  Matrix w1, b1, w2, b2;
  int reduction_ratio = 4;

  /// W1, W2 uniform in ±1/√fan_in, biases zero. Throws unless r divides D.
  static GateParams init(int dim, int reduction_ratio, std::uint64_t seed);
  static GateParams zeros(int dim, int reduction_ratio);
  int dim() const { return static_cast<int>(w1.cols()); }
};

struct GateCache {
  Matrix pre;  // f_T·W1ᵀ + b1, before the ReLU
  Matrix z;
  Matrix g;
};

Matrix gate_forward(const GateParams& p, const Matrix& f_t, GateCache* cache = nullptr);

/// Accumulates into `grads` and returns ∂L/∂f_T.
Matrix gate_backward(const GateParams& p, const Matrix& f_t, const GateCache& cache, const Matrix& dg,
                     GateParams& grads);

/// g⊙f_I + (1−g)⊙f_T.
Matrix fuse(const Matrix& f_i, const Matrix& f_t, const Matrix& g);

struct FuseGrads {
  Matrix df_i, df_t, dg;
};
FuseGrads fuse_backward(const Matrix& f_i, const Matrix& f_t, const Matrix& g, const Matrix& dy);

/// concat → [f_I, f_T] (width 2D); static → g ≡ 0.5; dynamic → gate then fuse.
/// Dynamic mode without params throws ArgumentError.
Matrix fuse_variant(Mode mode, const Matrix& f_i, const Matrix& f_t, const GateParams* params = nullptr);

}  // namespace xvg::fusion
