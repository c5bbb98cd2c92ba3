#include "xvg/objectives.hpp"

#include <algorithm>
#include <cmath>

#include "xvg/error.hpp"
#include "xvg/kernels.hpp"
#include "xvg/nn.hpp"
#include "xvg/seed.hpp"

namespace xvg::loss {

Matrix similarity_matrix(const Matrix& image, const Matrix& text, double tau) {
  if (!(tau > 0.0)) throw ArgumentError("similarity_matrix: tau must be positive");
  if (!image.same_shape(text)) throw ArgumentError("similarity_matrix: image and text batches differ in shape");
  const std::size_t B = image.rows();
  const auto& k = kernels::active();
  Matrix S(B, B);
  for (std::size_t i = 0; i < B; ++i)
    for (std::size_t j = 0; j < B; ++j) S(i, j) = k.dot(image.row(i).data(), text.row(j).data(), image.cols()) / tau;
  return S;
}

ItcResult itc_from_similarity(const Matrix& S) {
  const std::size_t B = S.rows();
  if (S.cols() != B) throw ArgumentError("itc: similarity matrix must be square");
  if (B < 2) throw ArgumentError("itc: needs a batch of at least 2");
  ItcResult out{0.0, Matrix(B, B)};
  const double scale = 1.0 / (2.0 * static_cast<double>(B));
  std::vector<double> line(B);
  for (std::size_t i = 0; i < B; ++i) {
    // Image i against all texts.
    for (std::size_t j = 0; j < B; ++j) line[j] = S(i, j);
    double lse = nn::log_sum_exp(line);
    out.loss += lse - S(i, i);
    for (std::size_t j = 0; j < B; ++j) out.dS(i, j) += scale * (std::exp(S(i, j) - lse) - (i == j));
    // Text i against all images.
    for (std::size_t j = 0; j < B; ++j) line[j] = S(j, i);
    lse = nn::log_sum_exp(line);
    out.loss += lse - S(i, i);
    for (std::size_t j = 0; j < B; ++j) out.dS(j, i) += scale * (std::exp(S(j, i) - lse) - (i == j));
  }
  out.loss *= scale;
  return out;
}

ItcGrads itc_loss(const Matrix& image, const Matrix& text, double tau) {
  const Matrix S = similarity_matrix(image, text, tau);
  const ItcResult r = itc_from_similarity(S);
  const std::size_t B = image.rows(), D = image.cols();
  ItcGrads g{r.loss, Matrix(B, D), Matrix(B, D), 0.0};
  const auto& k = kernels::active();
  for (std::size_t i = 0; i < B; ++i)
    for (std::size_t j = 0; j < B; ++j) {
      const double d = r.dS(i, j) / tau;
      k.axpy(d, text.row(j).data(), g.d_image.row(i).data(), D);
      k.axpy(d, image.row(i).data(), g.d_text.row(j).data(), D);
      g.d_tau -= r.dS(i, j) * S(i, j) / tau;
    }
  return g;
}

// ---------------------------------------------------------------------------

HardNegatives mine_hard_negatives(const Matrix& S) {
  const std::size_t B = S.rows();
  if (S.cols() != B) throw ArgumentError("mine_hard_negatives: similarity matrix must be square");
  if (B < 2) throw ArgumentError("mine_hard_negatives: needs a batch of at least 2");
  HardNegatives out{std::vector<std::size_t>(B), std::vector<std::size_t>(B)};
  for (std::size_t i = 0; i < B; ++i) {
    std::size_t best_t = i == 0 ? 1 : 0, best_i = best_t;
    for (std::size_t j = 0; j < B; ++j) {
      if (j == i) continue;
      if (S(i, j) > S(i, best_t)) best_t = j;
      if (S(j, i) > S(best_i, i)) best_i = j;
    }
    out.text[i] = best_t;
    out.image[i] = best_i;
  }
  return out;
}

ItmPairs build_itm_pairs(const HardNegatives& neg) {
  const std::size_t B = neg.text.size();
  ItmPairs p;
  for (std::size_t i = 0; i < B; ++i) {
    p.image.push_back(i);
    p.text.push_back(i);
    p.label.push_back(1);
  }
  for (std::size_t i = 0; i < B; ++i) {
    p.image.push_back(i);
    p.text.push_back(neg.text[i]);
    p.label.push_back(0);
  }
  for (std::size_t i = 0; i < B; ++i) {
    p.image.push_back(neg.image[i]);
    p.text.push_back(i);
    p.label.push_back(0);
  }
  return p;
}

MatchParams MatchParams::init(int d, std::uint64_t seed) {
  Rng rng(split_seed(seed, "match"));
  return {nn::uniform_matrix(1, static_cast<std::size_t>(d), 1.0 / std::sqrt(static_cast<double>(d)), rng),
          Matrix(1, 1)};
}

ItmResult itm_loss(const MatchParams& p, const Matrix& h, std::span<const int> labels, MatchParams* grads) {
  const std::size_t n = h.rows();
  if (labels.size() != n || n == 0 || n % 3 != 0) {
    throw ArgumentError("itm_loss: expected 3B pairs, got " + std::to_string(n) + " vectors and " +
                        std::to_string(labels.size()) + " labels");
  }
  if (std::count(labels.begin(), labels.end(), 1) != static_cast<std::ptrdiff_t>(n / 3) ||
      std::count(labels.begin(), labels.end(), 0) != static_cast<std::ptrdiff_t>(2 * n / 3)) {
    throw ArgumentError("itm_loss: need exactly B positive and 2B negative labels");
  }
  const Matrix logits = nn::linear(h, p.w, p.b);
  ItmResult out{0.0, Matrix(n, 1)};
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double s = logits[k];
    out.loss += nn::softplus(s) - labels[k] * s;
    out.dH[k] = scale * (nn::sigmoid(s) - labels[k]);
  }
  out.loss *= scale;
  Matrix dlogit = std::move(out.dH);
  out.dH = nn::linear_backward(h, p.w, dlogit, grads ? &grads->w : nullptr, grads ? &grads->b : nullptr);
  return out;
}

// ---------------------------------------------------------------------------

LocParams LocParams::zeros(int d) {
  const auto n = static_cast<std::size_t>(d);
  return {Matrix(2 * n, n), Matrix(1, 2 * n), Matrix(4, 2 * n), Matrix(1, 4)};
}

LocParams LocParams::init(int d, std::uint64_t seed) {
  LocParams p = zeros(d);
  Rng rng(split_seed(seed, "box-head"));
  p.w1 = nn::uniform_matrix(p.w1.rows(), p.w1.cols(), 1.0 / std::sqrt(static_cast<double>(p.w1.cols())), rng);
  p.w2 = nn::uniform_matrix(p.w2.rows(), p.w2.cols(), 1.0 / std::sqrt(static_cast<double>(p.w2.cols())), rng);
  return p;
}

Matrix box_head_forward(const LocParams& p, const Matrix& x, BoxHeadCache* cache) {
  BoxHeadCache local;
  BoxHeadCache& c = cache ? *cache : local;
  c.pre = nn::linear(x, p.w1, p.b1);
  c.hidden = c.pre;
  for (double& v : c.hidden.values()) v = nn::gelu(v);
  c.out = nn::linear(c.hidden, p.w2, p.b2);
  for (double& v : c.out.values()) v = nn::sigmoid(v);
  return c.out;
}

Matrix box_head_backward(const LocParams& p, const Matrix& x, const BoxHeadCache& c, const Matrix& dl,
                         LocParams& grads) {
  Matrix da(dl.rows(), dl.cols());
  for (std::size_t i = 0; i < dl.size(); ++i) da[i] = dl[i] * c.out[i] * (1.0 - c.out[i]);
  Matrix dh = nn::linear_backward(c.hidden, p.w2, da, &grads.w2, &grads.b2);
  for (std::size_t i = 0; i < dh.size(); ++i) dh[i] *= nn::gelu_derivative(c.pre[i]);
  return nn::linear_backward(x, p.w1, dh, &grads.w1, &grads.b1);
}

double iou(const Box& a, const Box& b) {
  const double iw = std::max(0.0, std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1()));
  const double ih = std::max(0.0, std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1()));
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

IouGrad iou_with_grad(const Box& t, const Box& p) {
  IouGrad out;
  const double raw_w = std::min(p.x2(), t.x2()) - std::max(p.x1(), t.x1());
  const double raw_h = std::min(p.y2(), t.y2()) - std::max(p.y1(), t.y1());
  const double iw = std::max(0.0, raw_w), ih = std::max(0.0, raw_h);
  const double inter = iw * ih;
  const double uni = p.area() + t.area() - inter;
  if (!(uni > 0.0)) return out;
  out.value = inter / uni;

  // ∂IoU/∂inter and ∂IoU/∂area_p; area_t is constant.
  const double d_inter = (uni + inter) / (uni * uni);
  const double d_area = -inter / (uni * uni);

  double dx1 = 0, dx2 = 0, dy1 = 0, dy2 = 0;
  if (raw_w >= 0.0 && raw_h >= 0.0) {
    // Prediction edges bind at ties.
    if (p.x2() <= t.x2()) dx2 = ih;
    if (p.x1() >= t.x1()) dx1 = -ih;
    if (p.y2() <= t.y2()) dy2 = iw;
    if (p.y1() >= t.y1()) dy1 = -iw;
  }
  // corners → center-size: x1 = cx − w/2, x2 = cx + w/2.
  const double di_cx = dx1 + dx2, di_w = (dx2 - dx1) / 2;
  const double di_cy = dy1 + dy2, di_h = (dy2 - dy1) / 2;
  out.d_pred = {d_inter * di_cx, d_inter * di_cy, d_inter * di_w + d_area * p.h, d_inter * di_h + d_area * p.w};
  return out;
}

LaResult la_loss(const LocParams& p, const Matrix& x, std::span<const Box> truth, LocParams* grads) {
  const std::size_t n = x.rows();
  if (n == 0) throw ArgumentError("la_loss: needs at least one concept");
  if (truth.size() != n) throw ArgumentError("la_loss: one ground-truth box per concept required");
  for (const Box& b : truth) {
    if (!is_valid_region_box(b)) throw ArgumentError("la_loss: invalid ground-truth box");
  }
  BoxHeadCache cache;
  const Matrix pred = box_head_forward(p, x, &cache);
  LaResult out{0.0, Matrix()};
  Matrix dl(n, 4);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Box ph{pred(k, 0), pred(k, 1), pred(k, 2), pred(k, 3)};
    const IouGrad g = iou_with_grad(truth[k], ph);
    const auto gt = truth[k].as_array();
    double l1 = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
      const double diff = pred(k, j) - gt[j];
      l1 += std::abs(diff);
      const double sign = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
      dl(k, j) = scale * (sign - g.d_pred[j]);
    }
    out.loss += (1.0 - g.value) + l1;
  }
  out.loss *= scale;
  LocParams scratch = LocParams::zeros(static_cast<int>(x.cols()));
  out.dX = box_head_backward(p, x, cache, dl, grads ? *grads : scratch);
  return out;
}

// ---------------------------------------------------------------------------

ClfParams ClfParams::init(int classes, int width, std::uint64_t seed) {
  Rng rng(split_seed(seed, "classifier"));
  return {nn::uniform_matrix(static_cast<std::size_t>(classes), static_cast<std::size_t>(width),
                             1.0 / std::sqrt(static_cast<double>(width)), rng),
          Matrix(1, static_cast<std::size_t>(classes))};
}

CeResult ce_loss(const ClfParams& p, const Matrix& z, std::span<const int> labels, ClfParams* grads) {
  const std::size_t B = z.rows(), C = p.w.rows();
  if (labels.size() != B || B == 0) throw ArgumentError("ce_loss: one label per row required");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= C) {
      throw ArgumentError("ce_loss: label " + std::to_string(y) + " outside [0," + std::to_string(C) + ")");
    }
  }
  const Matrix logits = nn::linear(z, p.w, p.b);
  CeResult out{0.0, Matrix()};
  Matrix dO(B, C);
  const double scale = 1.0 / static_cast<double>(B);
  for (std::size_t b = 0; b < B; ++b) {
    const double lse = nn::log_sum_exp(logits.row(b));
    const auto y = static_cast<std::size_t>(labels[b]);
    out.loss += lse - logits(b, y);
    for (std::size_t c = 0; c < C; ++c) dO(b, c) = scale * (std::exp(logits(b, c) - lse) - (c == y));
  }
  out.loss *= scale;
  out.dZ = nn::linear_backward(z, p.w, dO, grads ? &grads->w : nullptr, grads ? &grads->b : nullptr);
  return out;
}

double total_loss(const LossComponents& c) {
  auto check = [](const char* name, double v) {
    if (!std::isfinite(v)) throw TrainingError(std::string("non-finite loss component: ") + name);
  };
  double total = 0.0;
  if (c.itc) check("itc", *c.itc), total += *c.itc;
  if (c.itm) check("itm", *c.itm), total += *c.itm;
  if (c.la) check("la", *c.la), total += *c.la;
  check("ce", c.ce);
  total += c.ce;
  return total;
}

}  // namespace xvg::loss
