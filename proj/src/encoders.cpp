#include "xvg/encoders.hpp"

#include <cctype>
#include <cmath>

#include "xvg/error.hpp"
#include "xvg/kernels.hpp"
#include "xvg/nn.hpp"
#include "xvg/seed.hpp"

namespace xvg::enc {

namespace {

constexpr std::uint64_t kTokenHashBasis = 0x84222325cbf29ce4ULL;

Matrix fan_in_uniform(std::size_t out, std::size_t in, Rng& rng) {
  return nn::uniform_matrix(out, in, 1.0 / std::sqrt(static_cast<double>(in)), rng);
}

}  // namespace

void EncoderConfig::validate() const {
  if (image_size <= 0 || patch_size <= 0 || image_size % patch_size != 0) {
    throw ArgumentError("encoder: patch_size must divide image_size");
  }
  if (visual_hidden <= 0 || embed_dim <= 0 || token_dim <= 0 || joint_hidden <= 0 || joint_dim < 0) {
    throw ArgumentError("encoder: dimensions must be positive");
  }
}

EncoderParams EncoderParams::init(const EncoderConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  EncoderParams p;
  p.config = cfg;
  const auto P = static_cast<std::size_t>(cfg.pooled_dim());
  const auto Hv = static_cast<std::size_t>(cfg.visual_hidden);
  const auto D = static_cast<std::size_t>(cfg.embed_dim);
  const auto Et = static_cast<std::size_t>(cfg.token_dim);
  const auto Hj = static_cast<std::size_t>(cfg.joint_hidden);
  const auto d = static_cast<std::size_t>(cfg.resolved_joint_dim());

  Rng vis(split_seed(seed, "visual"));
  p.vis_w1 = fan_in_uniform(Hv, P, vis);
  p.vis_b1 = Matrix(1, Hv);
  p.vis_w2 = fan_in_uniform(D, Hv, vis);
  p.vis_b2 = Matrix(1, D);

  Rng txt(split_seed(seed, "text"));
  p.tok_embed = nn::uniform_matrix(kVocabBuckets, Et, 1.0, txt);
  p.txt_w = fan_in_uniform(D, Et, txt);
  p.txt_b = Matrix(1, D);

  Rng joint(split_seed(seed, "joint"));
  p.joint_w1 = fan_in_uniform(Hj, 2 * D, joint);
  p.joint_b1 = Matrix(1, Hj);
  p.joint_w2 = fan_in_uniform(d, Hj, joint);
  p.joint_b2 = Matrix(1, d);
  return p;
}

EncoderParams EncoderParams::zeros_like() const {
  EncoderParams z = *this;
  z.for_each([](const std::string&, Matrix& m) { m.set_zero(); });
  return z;
}

void EncoderParams::for_each(const std::function<void(const std::string&, Matrix&)>& f) {
  f("encoder.visual.w1", vis_w1);
  f("encoder.visual.b1", vis_b1);
  f("encoder.visual.w2", vis_w2);
  f("encoder.visual.b2", vis_b2);
  f("encoder.text.token_embedding", tok_embed);
  f("encoder.text.w", txt_w);
  f("encoder.text.b", txt_b);
  f("encoder.joint.w1", joint_w1);
  f("encoder.joint.b1", joint_b1);
  f("encoder.joint.w2", joint_w2);
  f("encoder.joint.b2", joint_b2);
}

void EncoderParams::for_each(const std::function<void(const std::string&, const Matrix&)>& f) const {
  const_cast<EncoderParams*>(this)->for_each([&](const std::string& n, Matrix& m) { f(n, m); });
}

// ---------------------------------------------------------------------------

Matrix patch_pool(std::span<const ImageTensor> images, int patch_size) {
  if (images.empty()) throw ArgumentError("encode_image: empty batch");
  const ImageTensor& first = images.front();
  if (first.height % patch_size != 0 || first.width % patch_size != 0) {
    throw ArgumentError("encode_image: image size is not a multiple of the patch size");
  }
  const int ph = first.height / patch_size, pw = first.width / patch_size;
  Matrix pooled(images.size(), static_cast<std::size_t>(ph) * pw * 3);
  const double inv = 1.0 / (patch_size * patch_size);
  for (std::size_t b = 0; b < images.size(); ++b) {
    const ImageTensor& img = images[b];
    if (!img.same_shape(first)) throw ArgumentError("encode_image: images in a batch must share one shape");
    auto row = pooled.row(b);
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        const std::size_t cell = (static_cast<std::size_t>(y / patch_size) * pw + x / patch_size) * 3;
        for (int c = 0; c < 3; ++c) row[cell + c] += img.at(y, x, c);
      }
    for (double& v : row) v = 2.0 * v * inv - 1.0;
  }
  return pooled;
}

Matrix encode_image(const EncoderParams& p, std::span<const ImageTensor> images, VisualCache* cache) {
  const auto& cfg = p.config;
  for (const auto& img : images) {
    if (img.height != cfg.image_size || img.width != cfg.image_size) {
      throw ArgumentError("encode_image: expected " + std::to_string(cfg.image_size) + "x" +
                          std::to_string(cfg.image_size) + " images");
    }
  }
  VisualCache local;
  VisualCache& c = cache ? *cache : local;
  c.pooled = patch_pool(images, cfg.patch_size);
  c.hidden = nn::tanh(nn::linear(c.pooled, p.vis_w1, p.vis_b1));
  c.u = nn::linear(c.hidden, p.vis_w2, p.vis_b2);
  c.f = nn::l2_normalize_rows(c.u, &c.norms);
  return c.f;
}

void encode_image_backward(const EncoderParams& p, const VisualCache& c, const Matrix& df, const Matrix* du,
                           EncoderParams& g) {
  Matrix dU = nn::l2_normalize_rows_backward(c.f, c.norms, df);
  if (du) nn::add_inplace(dU, *du);
  const Matrix dH = nn::linear_backward(c.hidden, p.vis_w2, dU, &g.vis_w2, &g.vis_b2);
  nn::linear_backward(c.pooled, p.vis_w1, nn::tanh_backward(c.hidden, dH), &g.vis_w1, &g.vis_b1);
}

// ---------------------------------------------------------------------------

std::vector<int> tokenize(const std::string& text) {
  std::vector<int> ids;
  std::string tok;
  auto flush = [&] {
    if (!tok.empty()) ids.push_back(static_cast<int>(fnv1a(tok, kTokenHashBasis) % kVocabBuckets));
    tok.clear();
  };
  for (unsigned char ch : text) {
    if (std::isalnum(ch)) tok += static_cast<char>(std::tolower(ch));
    else flush();
  }
  flush();
  return ids;
}

Matrix encode_text(const EncoderParams& p, std::span<const std::string> texts, TextCache* cache) {
  if (texts.empty()) throw ArgumentError("encode_text: empty batch");
  TextCache local;
  TextCache& c = cache ? *cache : local;
  const std::size_t Et = p.tok_embed.cols();
  c.tokens.clear();
  c.pooled = Matrix(texts.size(), Et);
  const auto& k = kernels::active();
  for (std::size_t b = 0; b < texts.size(); ++b) {
    auto ids = tokenize(texts[b]);
    if (ids.empty()) throw ArgumentError("encode_text: text has no tokens");
    const double w = 1.0 / static_cast<double>(ids.size());
    for (int id : ids) k.axpy(w, p.tok_embed.row(static_cast<std::size_t>(id)).data(), c.pooled.row(b).data(), Et);
    c.tokens.push_back(std::move(ids));
  }
  c.v = nn::linear(c.pooled, p.txt_w, p.txt_b);
  c.f = nn::l2_normalize_rows(c.v, &c.norms);
  return c.f;
}

void encode_text_backward(const EncoderParams& p, const TextCache& c, const Matrix& df, const Matrix* dv,
                          EncoderParams& g) {
  Matrix dV = nn::l2_normalize_rows_backward(c.f, c.norms, df);
  if (dv) nn::add_inplace(dV, *dv);
  const Matrix dPooled = nn::linear_backward(c.pooled, p.txt_w, dV, &g.txt_w, &g.txt_b);
  const auto& k = kernels::active();
  const std::size_t Et = p.tok_embed.cols();
  for (std::size_t b = 0; b < c.tokens.size(); ++b) {
    const double w = 1.0 / static_cast<double>(c.tokens[b].size());
    for (int id : c.tokens[b]) k.axpy(w, dPooled.row(b).data(), g.tok_embed.row(static_cast<std::size_t>(id)).data(), Et);
  }
}

// ---------------------------------------------------------------------------

Matrix encode_joint(const EncoderParams& p, const Matrix& u, const Matrix& v, JointCache* cache) {
  if (u.rows() != v.rows() || u.cols() + v.cols() != p.joint_w1.cols()) {
    throw ArgumentError("encode_joint: shape mismatch");
  }
  JointCache local;
  JointCache& c = cache ? *cache : local;
  c.input = Matrix(u.rows(), u.cols() + v.cols());
  for (std::size_t r = 0; r < u.rows(); ++r) {
    auto row = c.input.row(r);
    std::copy(u.row(r).begin(), u.row(r).end(), row.begin());
    std::copy(v.row(r).begin(), v.row(r).end(), row.begin() + static_cast<std::ptrdiff_t>(u.cols()));
  }
  c.hidden = nn::tanh(nn::linear(c.input, p.joint_w1, p.joint_b1));
  c.x = nn::tanh(nn::linear(c.hidden, p.joint_w2, p.joint_b2));
  return c.x;
}

JointGrads encode_joint_backward(const EncoderParams& p, const JointCache& c, const Matrix& dx, EncoderParams& g) {
  const Matrix dH = nn::linear_backward(c.hidden, p.joint_w2, nn::tanh_backward(c.x, dx), &g.joint_w2, &g.joint_b2);
  const Matrix dIn = nn::linear_backward(c.input, p.joint_w1, nn::tanh_backward(c.hidden, dH), &g.joint_w1, &g.joint_b1);
  const std::size_t D = p.config.embed_dim;
  JointGrads out{Matrix(dIn.rows(), D), Matrix(dIn.rows(), dIn.cols() - D)};
  for (std::size_t r = 0; r < dIn.rows(); ++r) {
    for (std::size_t j = 0; j < D; ++j) out.du(r, j) = dIn(r, j);
    for (std::size_t j = D; j < dIn.cols(); ++j) out.dv(r, j - D) = dIn(r, j);
  }
  return out;
}

std::vector<double> encode_joint(const EncoderParams& p, const ImageTensor& image, const std::string& text) {
  VisualCache vc;
  TextCache tc;
  encode_image(p, std::span(&image, 1), &vc);
  encode_text(p, std::span(&text, 1), &tc);
  const Matrix x = encode_joint(p, vc.u, tc.v);
  return {x.values().begin(), x.values().end()};
}

}  // namespace xvg::enc
