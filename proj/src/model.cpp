#include "xvg/model.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

#include "xvg/error.hpp"
#include "xvg/nn.hpp"
#include "xvg/seed.hpp"

namespace xvg::model {

Model Model::init(const ModelConfig& cfg, std::uint64_t seed) {
  if (cfg.num_classes < 1) throw ArgumentError("model: num_classes must be positive");
  if (!(cfg.tau_init > 0.0)) throw ArgumentError("model: tau_init must be positive");
  Model m;
  m.config = cfg;
  m.encoder = enc::EncoderParams::init(cfg.encoder, split_seed(seed, "encoders"));
  const int D = cfg.encoder.embed_dim, d = cfg.encoder.resolved_joint_dim();
  m.gate = fusion::GateParams::init(D, cfg.reduction_ratio, split_seed(seed, "fusion"));
  m.loc = loss::LocParams::init(d, split_seed(seed, "localization"));
  m.clf = loss::ClfParams::init(cfg.num_classes, m.fused_width(), split_seed(seed, "classification"));
  m.match = loss::MatchParams::init(d, split_seed(seed, "matching"));
  m.tau = Matrix(1, 1, cfg.tau_init);
  return m;
}

Model Model::zeros_like() const {
  Model z = *this;
  z.for_each([](const std::string&, Matrix& t) { t.set_zero(); });
  return z;
}

int Model::fused_width() const {
  const int D = config.encoder.embed_dim;
  return config.use_text && config.fusion == fusion::Mode::concat ? 2 * D : D;
}

void Model::for_each(const std::function<void(const std::string&, Matrix&)>& f) {
  encoder.for_each(f);
  f("gate.w1", gate.w1);
  f("gate.b1", gate.b1);
  f("gate.w2", gate.w2);
  f("gate.b2", gate.b2);
  f("box_head.w1", loc.w1);
  f("box_head.b1", loc.b1);
  f("box_head.w2", loc.w2);
  f("box_head.b2", loc.b2);
  f("classifier.w", clf.w);
  f("classifier.b", clf.b);
  f("match.w", match.w);
  f("match.b", match.b);
  f("tau", tau);
}

void Model::for_each(const std::function<void(const std::string&, const Matrix&)>& f) const {
  const_cast<Model*>(this)->for_each([&](const std::string& n, Matrix& t) { f(n, t); });
}

Matrix fused_features(const Model& m, std::span<const ImageTensor> images, std::span<const std::string> texts) {
  const Matrix f_i = enc::encode_image(m.encoder, images);
  if (!m.config.use_text) return f_i;
  if (texts.size() != images.size()) throw ArgumentError("fused_features: one text per image required");
  const Matrix f_t = enc::encode_text(m.encoder, texts);
  return fusion::fuse_variant(m.config.fusion, f_i, f_t, &m.gate);
}

Matrix retrieval_embedding(const Model& m, std::span<const ImageTensor> images, std::span<const std::string> texts) {
  return nn::l2_normalize_rows(fused_features(m, images, texts));
}

// ---------------------------------------------------------------------------

std::vector<NamedTensor> export_tensors(const Model& m) {
  std::vector<NamedTensor> out;
  m.for_each([&](const std::string& n, const Matrix& t) { out.push_back({n, t}); });
  return out;
}

void import_tensors(Model& m, const std::vector<NamedTensor>& tensors) {
  std::size_t i = 0;
  m.for_each([&](const std::string& n, Matrix& t) {
    if (i >= tensors.size() || tensors[i].name != n) throw StructuralError("checkpoint: missing tensor " + n);
    if (!tensors[i].value.same_shape(t)) throw StructuralError("checkpoint: shape mismatch for tensor " + n);
    t = tensors[i++].value;
  });
  if (i != tensors.size()) throw StructuralError("checkpoint: unexpected extra tensors");
}

namespace {

constexpr char kMagic[8] = {'X', 'V', 'G', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  template <class T>
  void put(T v) {
    const auto* p = reinterpret_cast<const unsigned char*>(&v);
    bytes.insert(bytes.end(), p, p + sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    bytes.insert(bytes.end(), p, p + n);
  }
  void put_tensors(const std::vector<NamedTensor>& ts) {
    put(static_cast<std::uint32_t>(ts.size()));
    for (const auto& t : ts) {
      put(static_cast<std::uint32_t>(t.name.size()));
      put_bytes(t.name.data(), t.name.size());
      put(static_cast<std::uint64_t>(t.value.rows()));
      put(static_cast<std::uint64_t>(t.value.cols()));
      put_bytes(t.value.data(), t.value.size() * sizeof(double));
    }
  }
  std::vector<unsigned char> bytes;
};

class Reader {
 public:
  explicit Reader(std::span<const unsigned char> b) : bytes_(b) {}
  template <class T>
  T get() {
    T v;
    get_bytes(&v, sizeof(T));
    return v;
  }
  void get_bytes(void* out, std::size_t n) {
    if (n > bytes_.size() - pos_) throw StructuralError("checkpoint: truncated file");
    std::memcpy(out, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::string get_string(std::size_t n) {
    std::string s(n, '\0');
    get_bytes(s.data(), n);
    return s;
  }
  std::vector<NamedTensor> get_tensors() {
    const auto count = get<std::uint32_t>();
    std::vector<NamedTensor> ts;
    for (std::uint32_t i = 0; i < count; ++i) {
      NamedTensor t;
      t.name = get_string(get<std::uint32_t>());
      const auto rows = get<std::uint64_t>(), cols = get<std::uint64_t>();
      if (cols != 0 && rows > (bytes_.size() - pos_) / sizeof(double) / cols) {
        throw StructuralError("checkpoint: truncated tensor " + t.name);
      }
      t.value = Matrix(rows, cols);
      get_bytes(t.value.data(), t.value.size() * sizeof(double));
      ts.push_back(std::move(t));
    }
    return ts;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const unsigned char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<unsigned char> serialize_checkpoint(const Checkpoint& c) {
  Writer w;
  w.put_bytes(kMagic, sizeof kMagic);
  w.put(kVersion);
  w.put(static_cast<std::uint64_t>(c.config_text.size()));
  w.put_bytes(c.config_text.data(), c.config_text.size());
  w.put(c.fingerprint);
  w.put(c.epoch);
  w.put(c.step);
  w.put_tensors(c.params);
  w.put_tensors(c.momentum);
  return std::move(w.bytes);
}

Checkpoint deserialize_checkpoint(std::span<const unsigned char> bytes) {
  Reader r(bytes);
  char magic[8];
  r.get_bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw StructuralError("checkpoint: bad magic");
  if (const auto v = r.get<std::uint32_t>(); v != kVersion) {
    throw StructuralError("checkpoint: unsupported version " + std::to_string(v));
  }
  Checkpoint c;
  c.config_text = r.get_string(r.get<std::uint64_t>());
  c.fingerprint = r.get<std::uint64_t>();
  if (c.fingerprint != fnv1a(c.config_text)) throw StructuralError("checkpoint: config fingerprint mismatch");
  c.epoch = r.get<std::uint64_t>();
  c.step = r.get<std::uint64_t>();
  c.params = r.get_tensors();
  c.momentum = r.get_tensors();
  if (!r.done()) throw StructuralError("checkpoint: trailing bytes");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  const auto bytes = serialize_checkpoint(c);
  // Write-then-rename so a crash never leaves a half-written checkpoint.
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StructuralError("cannot write checkpoint: " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw StructuralError("cannot write checkpoint: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StructuralError("cannot open checkpoint: " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace xvg::model
