#include "xvg/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "xvg/error.hpp"
#include "xvg/nn.hpp"
#include "xvg/seed.hpp"

namespace xvg::fusion {

std::string to_string(Mode m) {
  switch (m) {
    case Mode::concat: return "concat";
    case Mode::static_gate: return "static";
    case Mode::dynamic: return "dynamic";
  }
  return "unknown";
}

Mode parse_mode(const std::string& s) {
  if (s == "concat") return Mode::concat;
  if (s == "static") return Mode::static_gate;
  if (s == "dynamic") return Mode::dynamic;
  throw ArgumentError("unknown fusion mode: " + s + " (expected concat, static or dynamic)");
}

GateParams GateParams::zeros(int dim, int reduction_ratio) {
  if (dim <= 0 || reduction_ratio <= 0 || dim % reduction_ratio != 0) {
    throw ArgumentError("gate: reduction ratio " + std::to_string(reduction_ratio) + " must divide D=" +
                        std::to_string(dim));
  }
  const auto D = static_cast<std::size_t>(dim);
  const auto h = D / static_cast<std::size_t>(reduction_ratio);
  GateParams p;
  p.reduction_ratio = reduction_ratio;
  p.w1 = Matrix(h, D);
  p.b1 = Matrix(1, h);
  p.w2 = Matrix(D, h);
  p.b2 = Matrix(1, D);
  return p;
}

GateParams GateParams::init(int dim, int reduction_ratio, std::uint64_t seed) {
  GateParams p = zeros(dim, reduction_ratio);
  Rng rng(split_seed(seed, "gate"));
  p.w1 = nn::uniform_matrix(p.w1.rows(), p.w1.cols(), 1.0 / std::sqrt(static_cast<double>(p.w1.cols())), rng);
  p.w2 = nn::uniform_matrix(p.w2.rows(), p.w2.cols(), 1.0 / std::sqrt(static_cast<double>(p.w2.cols())), rng);
  return p;
}

Matrix gate_forward(const GateParams& p, const Matrix& f_t, GateCache* cache) {
  if (f_t.cols() != p.w1.cols()) {
    throw ArgumentError("gate_forward: f_T has " + std::to_string(f_t.cols()) + " columns, gate expects " +
                        std::to_string(p.w1.cols()));
  }
  GateCache local;
  GateCache& c = cache ? *cache : local;
  c.pre = nn::linear(f_t, p.w1, p.b1);
  c.z = c.pre;
  for (double& v : c.z.values()) v = std::max(v, 0.0);
  c.g = nn::linear(c.z, p.w2, p.b2);
  for (double& v : c.g.values()) v = nn::sigmoid(v);
  return c.g;
}

Matrix gate_backward(const GateParams& p, const Matrix& f_t, const GateCache& c, const Matrix& dg, GateParams& grads) {
  Matrix da(dg.rows(), dg.cols());
  for (std::size_t i = 0; i < dg.size(); ++i) da[i] = dg[i] * c.g[i] * (1.0 - c.g[i]);
  Matrix dz = nn::linear_backward(c.z, p.w2, da, &grads.w2, &grads.b2);
  for (std::size_t i = 0; i < dz.size(); ++i)
    if (c.pre[i] <= 0.0) dz[i] = 0.0;
  return nn::linear_backward(f_t, p.w1, dz, &grads.w1, &grads.b1);
}

Matrix fuse(const Matrix& f_i, const Matrix& f_t, const Matrix& g) {
  if (!f_i.same_shape(f_t) || !f_i.same_shape(g)) throw ArgumentError("fuse: f_I, f_T and g must share one shape");
  Matrix out(f_i.rows(), f_i.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = g[i] * f_i[i] + (1.0 - g[i]) * f_t[i];
  return out;
}

FuseGrads fuse_backward(const Matrix& f_i, const Matrix& f_t, const Matrix& g, const Matrix& dy) {
  FuseGrads out{Matrix(dy.rows(), dy.cols()), Matrix(dy.rows(), dy.cols()), Matrix(dy.rows(), dy.cols())};
  for (std::size_t i = 0; i < dy.size(); ++i) {
    out.df_i[i] = dy[i] * g[i];
    out.df_t[i] = dy[i] * (1.0 - g[i]);
    out.dg[i] = dy[i] * (f_i[i] - f_t[i]);
  }
  return out;
}

Matrix fuse_variant(Mode mode, const Matrix& f_i, const Matrix& f_t, const GateParams* params) {
  if (!f_i.same_shape(f_t)) throw ArgumentError("fuse_variant: f_I and f_T must share one shape");
  switch (mode) {
    case Mode::concat: {
      const std::size_t D = f_i.cols();
      Matrix out(f_i.rows(), 2 * D);
      for (std::size_t r = 0; r < f_i.rows(); ++r) {
        std::copy(f_i.row(r).begin(), f_i.row(r).end(), out.row(r).begin());
        std::copy(f_t.row(r).begin(), f_t.row(r).end(), out.row(r).begin() + static_cast<std::ptrdiff_t>(D));
      }
      return out;
    }
    case Mode::static_gate:
      return fuse(f_i, f_t, Matrix(f_i.rows(), f_i.cols(), 0.5));
    case Mode::dynamic:
      if (!params) throw ArgumentError("fuse_variant: dynamic mode needs gate parameters");
      return fuse(f_i, f_t, gate_forward(*params, f_t));
  }
  throw ArgumentError("fuse_variant: unknown mode");
}

}  // namespace xvg::fusion
