#include "xvg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "xvg/error.hpp"
#include "xvg/nn.hpp"
#include "xvg/weather.hpp"

namespace xvg::train {

namespace fs = std::filesystem;

TrainConfig TrainConfig::from(const config::ExperimentConfig& c) {
  TrainConfig t;
  t.base_lr = c.base_lr;
  t.head_lr_scale = c.head_lr_scale;
  t.momentum = c.momentum;
  t.weight_decay = c.weight_decay;
  t.epochs = c.epochs;
  t.lr_drops = c.lr_drops;
  t.batch_size = c.batch_size;
  t.max_steps = c.max_steps;
  t.checkpoint_every = c.checkpoint_every;
  t.tau_min = c.tau_min;
  t.tau_max = c.tau_max;
  t.crop_min_fraction = c.crop_min_fraction;
  t.flip = c.flip;
  t.freeze_encoders = c.freeze_encoders;
  t.use_text = c.use_text();
  t.weather_intensity = c.weather_intensity;
  t.satellite_text = c.satellite_text;
  t.seed = c.seed;
  return t;
}

double lr_at(const TrainConfig& cfg, int epoch) {
  if (epoch < 0 || epoch >= cfg.epochs) {
    throw ArgumentError("lr_at: epoch " + std::to_string(epoch) + " outside [0," + std::to_string(cfg.epochs) + ")");
  }
  double factor = 1.0;
  for (const auto& [at, f] : cfg.lr_drops)
    if (epoch >= at) factor = f;
  return cfg.base_lr * factor;
}

void sgd_step(std::span<Matrix* const> params, std::span<const Matrix* const> grads, std::span<Matrix* const> velocity,
              double lr, double momentum, double weight_decay) {
  if (params.size() != grads.size() || params.size() != velocity.size()) {
    throw ArgumentError("sgd_step: parameter, gradient and state lists differ in length");
  }
  for (std::size_t t = 0; t < params.size(); ++t) {
    Matrix& p = *params[t];
    const Matrix& g = *grads[t];
    Matrix& v = *velocity[t];
    if (!p.same_shape(g) || !p.same_shape(v)) throw ArgumentError("sgd_step: shape mismatch");
    if (!g.all_finite()) throw TrainingError("sgd_step: non-finite gradient");
    for (std::size_t i = 0; i < p.size(); ++i) {
      v[i] = momentum * v[i] + (g[i] + weight_decay * p[i]);
      p[i] -= lr * v[i];
    }
  }
}

void sgd_step(model::Model& m, const model::Model& grads, model::Model& velocity, double lr, const TrainConfig& cfg) {
  std::vector<Matrix*> ps, vs;
  std::vector<const Matrix*> gs;
  std::vector<std::string> names;
  m.for_each([&](const std::string& n, Matrix& t) {
    names.push_back(n);
    ps.push_back(&t);
  });
  grads.for_each([&](const std::string&, const Matrix& t) { gs.push_back(&t); });
  velocity.for_each([&](const std::string&, Matrix& t) { vs.push_back(&t); });
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (!gs[i]->all_finite()) throw TrainingError("non-finite gradient for " + names[i]);
    if (cfg.freeze_encoders && names[i].rfind("encoder.", 0) == 0) continue;
    // The temperature is not decayed.
    const bool tau = names[i] == "tau";
    const bool head = !tau && names[i].rfind("encoder.", 0) != 0;
    const double wd = tau ? 0.0 : cfg.weight_decay;
    sgd_step(std::span(&ps[i], 1), std::span(&gs[i], 1), std::span(&vs[i], 1), head ? lr * cfg.head_lr_scale : lr,
             cfg.momentum, wd);
  }
  m.tau[0] = std::clamp(m.tau[0], cfg.tau_min, cfg.tau_max);
}

// ---------------------------------------------------------------------------

namespace {

struct Crop {
  int x0 = 0, y0 = 0, side_w = 0, side_h = 0;
  bool flip = false;
};

Crop draw_crop(const ImageTensor& img, const TrainConfig& cfg, Rng& rng) {
  Crop c;
  const double s = uniform(rng, cfg.crop_min_fraction, 1.0);
  c.side_w = std::clamp(static_cast<int>(std::lround(s * img.width)), 1, img.width);
  c.side_h = std::clamp(static_cast<int>(std::lround(s * img.height)), 1, img.height);
  c.x0 = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(img.width - c.side_w + 1)));
  c.y0 = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(img.height - c.side_h + 1)));
  c.flip = cfg.flip && uniform_index(rng, 2) == 1;
  return c;
}

ImageTensor apply_crop(const ImageTensor& img, const Crop& c) {
  ImageTensor out = crop_resize(img, c.x0, c.y0, c.side_w, c.side_h, img.height, img.width);
  return c.flip ? flip_horizontal(out) : out;
}

std::optional<Box> crop_box(const Box& b, const Crop& c, int width, int height) {
  const double x1 = (b.x1() * width - c.x0) / c.side_w, x2 = (b.x2() * width - c.x0) / c.side_w;
  const double y1 = (b.y1() * height - c.y0) / c.side_h, y2 = (b.y2() * height - c.y0) / c.side_h;
  Box out = clamp_to_unit(Box::from_corners(x1, y1, x2, y2));
  if (c.flip) out.cx = 1.0 - out.cx;
  if (out.w < 1e-3 || out.h < 1e-3) return std::nullopt;
  return out;
}

std::size_t entry_position(const pipeline::SplitData& d, const data::DatasetEntry* e) {
  return static_cast<std::size_t>(e - d.index.entries.data());
}

const caption::CaptionRecord& require_caption(const caption::CaptionIndex& captions, const std::string& split,
                                              const std::string& view, int location, const std::string& condition) {
  const auto* rec = captions.find(split, view, location, condition);
  if (!rec || rec->status != caption::Status::accepted) {
    throw ArgumentError("missing caption for " + split + "/" + view + "/location " + std::to_string(location) + "/" +
                        condition);
  }
  return *rec;
}

}  // namespace

Batch build_batch(const pipeline::SplitData& d, const caption::CaptionIndex& captions, const TrainConfig& cfg,
                  Rng& rng) {
  const int C = d.index.num_locations();
  const int B = std::min(cfg.batch_size, C);
  if (B < 2) throw ArgumentError("build_batch: need at least 2 locations per batch");
  const std::string split = data::to_string(d.index.split);
  const auto suite = weather::condition_suite(cfg.weather_intensity);

  std::vector<int> locations(static_cast<std::size_t>(C));
  for (int i = 0; i < C; ++i) locations[static_cast<std::size_t>(i)] = i;
  shuffle(locations.begin(), locations.end(), rng);
  locations.resize(static_cast<std::size_t>(B));

  Batch batch;
  for (int loc : locations) {
    const auto drones = d.index.entries_of(loc, data::ViewKind::drone);
    const auto sats = d.index.entries_of(loc, data::ViewKind::satellite);
    if (drones.empty() || sats.empty()) throw StructuralError("location " + std::to_string(loc) + " lacks a view");

    BatchRow dr;
    const std::size_t de = entry_position(d, drones[uniform_index(rng, drones.size())]);
    const auto& cond = suite[uniform_index(rng, suite.size())];
    const auto spec = weather::reseeded(cond.spec, rng());
    const ImageTensor& src = d.images[de];
    const Crop crop = draw_crop(src, cfg, rng);
    dr.image = apply_crop(weather::apply_weather(src, spec), crop);
    dr.label = loc;
    dr.view = data::ViewKind::drone;
    dr.condition = cond.name;
    dr.image_ref = d.index.entries[de].image_ref;
    if (cfg.use_text) {
      const auto& rec = require_caption(captions, split, "drone", loc, cond.name);
      dr.text = rec.full_text();
      for (std::size_t j = 0; j < 3; ++j) {
        const int object = rec.region_boxes[j].object_id;
        for (const auto& r : d.regions[de]) {
          if (r.object_id != object) continue;
          if (auto b = crop_box(r.box, crop, src.width, src.height)) dr.concepts.push_back({rec.region_hints[j], *b});
        }
      }
    }

    BatchRow sr;
    const std::size_t se = entry_position(d, sats[uniform_index(rng, sats.size())]);
    sr.image = apply_crop(d.images[se], draw_crop(d.images[se], cfg, rng));
    sr.label = loc;
    sr.view = data::ViewKind::satellite;
    sr.condition = "Normal";
    sr.image_ref = d.index.entries[se].image_ref;
    if (cfg.use_text) {
      sr.text = cfg.satellite_text == "neutral_constant" ? pipeline::kNeutralSatelliteText
                                                         : require_caption(captions, split, "satellite", loc, "Normal").full_text();
    }
    batch.drone.push_back(std::move(dr));
    batch.satellite.push_back(std::move(sr));
  }
  return batch;
}

// ---------------------------------------------------------------------------

namespace {

void scatter_add_rows(Matrix& dst, const Matrix& src, std::span<const std::size_t> rows) {
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto out = dst.row(rows[r]);
    const auto in = src.row(r);
    for (std::size_t c = 0; c < in.size(); ++c) out[c] += in[c];
  }
}

Matrix top_rows(const Matrix& m, std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return m.gather_rows(idx);
}

}  // namespace

StepResult compute_step(const model::Model& m, const Batch& batch, model::Model* grads_out) {
  const std::size_t B = batch.drone.size();
  if (B < 2 || batch.satellite.size() != B) throw ArgumentError("compute_step: malformed batch");
  model::Model scratch;
  if (!grads_out) scratch = m.zeros_like();
  model::Model& g = grads_out ? *grads_out : scratch;

  std::vector<ImageTensor> images;
  std::vector<int> labels;
  for (const auto* rows : {&batch.drone, &batch.satellite})
    for (const auto& r : *rows) {
      images.push_back(r.image);
      labels.push_back(r.label);
    }
  enc::VisualCache vc;
  const Matrix f_i = enc::encode_image(m.encoder, images, &vc);
  StepResult out;

  if (!m.config.use_text) {
    const auto ce = loss::ce_loss(m.clf, f_i, labels, &g.clf);
    out.components.ce = ce.loss;
    out.total = loss::total_loss(out.components);
    enc::encode_image_backward(m.encoder, vc, ce.dZ, nullptr, g.encoder);
    return out;
  }

  // Text rows: drone captions, satellite captions, then one row per concept.
  std::vector<std::string> texts;
  for (const auto* rows : {&batch.drone, &batch.satellite})
    for (const auto& r : *rows) texts.push_back(r.text);
  std::vector<std::size_t> concept_image, concept_text;
  std::vector<Box> concept_boxes;
  for (std::size_t i = 0; i < B; ++i)
    for (const auto& c : batch.drone[i].concepts) {
      concept_image.push_back(i);
      concept_text.push_back(texts.size());
      concept_boxes.push_back(c.box);
      texts.push_back(c.text);
    }
  enc::TextCache tc;
  const Matrix f_t_all = enc::encode_text(m.encoder, texts, &tc);
  const Matrix f_t = top_rows(f_t_all, 2 * B);

  Matrix dF_I(f_i.rows(), f_i.cols());
  Matrix dF_T(f_t_all.rows(), f_t_all.cols());
  Matrix dU(vc.u.rows(), vc.u.cols());
  Matrix dV(tc.v.rows(), tc.v.cols());

  // Classification over the fused features of all 2B rows.
  {
    const std::size_t D = f_i.cols();
    fusion::GateCache gc;
    Matrix gate;
    Matrix z;
    switch (m.config.fusion) {
      case fusion::Mode::concat: z = fusion::fuse_variant(fusion::Mode::concat, f_i, f_t); break;
      case fusion::Mode::static_gate: gate = Matrix(f_i.rows(), D, 0.5); z = fusion::fuse(f_i, f_t, gate); break;
      case fusion::Mode::dynamic: gate = fusion::gate_forward(m.gate, f_t, &gc); z = fusion::fuse(f_i, f_t, gate); break;
    }
    const auto ce = loss::ce_loss(m.clf, z, labels, &g.clf);
    out.components.ce = ce.loss;
    if (m.config.fusion == fusion::Mode::concat) {
      for (std::size_t r = 0; r < f_i.rows(); ++r)
        for (std::size_t c = 0; c < D; ++c) {
          dF_I(r, c) += ce.dZ(r, c);
          dF_T(r, c) += ce.dZ(r, D + c);
        }
    } else {
      const auto fg = fusion::fuse_backward(f_i, f_t, gate, ce.dZ);
      nn::add_inplace(dF_I, fg.df_i);
      Matrix dft = fg.df_t;
      if (m.config.fusion == fusion::Mode::dynamic) {
        nn::add_inplace(dft, fusion::gate_backward(m.gate, f_t, gc, fg.dg, g.gate));
      }
      for (std::size_t r = 0; r < 2 * B; ++r)
        for (std::size_t c = 0; c < D; ++c) dF_T(r, c) += dft(r, c);
    }
  }

  // Contrastive and matching terms on the drone rows.
  const Matrix I = top_rows(f_i, B), T = top_rows(f_t, B);
  const double tau = m.tau[0];
  {
    const auto itc = loss::itc_loss(I, T, tau);
    out.components.itc = itc.loss;
    for (std::size_t r = 0; r < B; ++r)
      for (std::size_t c = 0; c < I.cols(); ++c) {
        dF_I(r, c) += itc.d_image(r, c);
        dF_T(r, c) += itc.d_text(r, c);
      }
    g.tau[0] += itc.d_tau;
  }
  {
    const auto pairs = loss::build_itm_pairs(loss::mine_hard_negatives(loss::similarity_matrix(I, T, tau)));
    enc::JointCache jc;
    const Matrix h = enc::encode_joint(m.encoder, vc.u.gather_rows(pairs.image), tc.v.gather_rows(pairs.text), &jc);
    const auto itm = loss::itm_loss(m.match, h, pairs.label, &g.match);
    out.components.itm = itm.loss;
    const auto jg = enc::encode_joint_backward(m.encoder, jc, itm.dH, g.encoder);
    scatter_add_rows(dU, jg.du, pairs.image);
    scatter_add_rows(dV, jg.dv, pairs.text);
  }
  if (!concept_boxes.empty()) {
    enc::JointCache jc;
    const Matrix x = enc::encode_joint(m.encoder, vc.u.gather_rows(concept_image), tc.v.gather_rows(concept_text), &jc);
    const auto la = loss::la_loss(m.loc, x, concept_boxes, &g.loc);
    out.components.la = la.loss;
    const auto jg = enc::encode_joint_backward(m.encoder, jc, la.dX, g.encoder);
    scatter_add_rows(dU, jg.du, concept_image);
    scatter_add_rows(dV, jg.dv, concept_text);
  }

  out.total = loss::total_loss(out.components);
  enc::encode_image_backward(m.encoder, vc, dF_I, &dU, g.encoder);
  enc::encode_text_backward(m.encoder, tc, dF_T, &dV, g.encoder);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string opt(const std::optional<double>& v) { return v ? num(*v) : "NA"; }

}  // namespace

std::string StepLog::line() const {
  return "step=" + std::to_string(step) + " lr=" + num(lr) + " itc=" + opt(components.itc) +
         " itm=" + opt(components.itm) + " la=" + opt(components.la) + " ce=" + num(components.ce) +
         " total=" + num(total) + " tau=" + num(tau);
}

StepLog StepLog::parse(const std::string& line) {
  StepLog s;
  std::istringstream in(line);
  std::string field;
  int seen = 0;
  while (in >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw ArgumentError("malformed log field: " + field);
    const std::string key = field.substr(0, eq), value = field.substr(eq + 1);
    auto as_opt = [&]() -> std::optional<double> {
      if (value == "NA") return std::nullopt;
      return std::stod(value);
    };
    if (key == "step") s.step = std::stoull(value);
    else if (key == "lr") s.lr = std::stod(value);
    else if (key == "itc") s.components.itc = as_opt();
    else if (key == "itm") s.components.itm = as_opt();
    else if (key == "la") s.components.la = as_opt();
    else if (key == "ce") s.components.ce = std::stod(value);
    else if (key == "total") s.total = std::stod(value);
    else if (key == "tau") s.tau = std::stod(value);
    else throw ArgumentError("unknown log field: " + key);
    ++seen;
  }
  if (seen != 8) throw ArgumentError("log line needs 8 fields: " + line);
  return s;
}

// ---------------------------------------------------------------------------

model::ModelConfig model_config(const config::ExperimentConfig& c, int num_classes) {
  model::ModelConfig m;
  m.encoder = c.encoder;
  m.fusion = c.fusion_mode;
  m.reduction_ratio = c.reduction_ratio;
  m.num_classes = num_classes;
  m.use_text = c.use_text();
  m.tau_init = c.tau_init;
  return m;
}

int steps_per_epoch(const pipeline::SplitData& data, const TrainConfig& cfg) {
  std::size_t drones = 0;
  for (const auto& e : data.index.entries) drones += e.view == data::ViewKind::drone;
  const std::size_t B = static_cast<std::size_t>(std::min(cfg.batch_size, data.index.num_locations()));
  return static_cast<int>(std::max<std::size_t>(1, (drones + B - 1) / B));
}

model::Checkpoint make_checkpoint(const config::ExperimentConfig& c, const model::Model& m,
                                  const model::Model& velocity, std::uint64_t epoch, std::uint64_t step) {
  model::Checkpoint ck;
  ck.config_text = config::to_text(c);
  ck.fingerprint = fnv1a(ck.config_text);
  ck.epoch = epoch;
  ck.step = step;
  ck.params = model::export_tensors(m);
  ck.momentum = model::export_tensors(velocity);
  return ck;
}

namespace {

fs::path epoch_checkpoint(const fs::path& dir, std::uint64_t epoch) {
  return dir / ("ckpt_epoch_" + std::to_string(epoch) + ".bin");
}

}  // namespace

TrainOutcome train(const TrainRun& run) {
  const auto& exp = run.experiment;
  config::validate(exp);
  const TrainConfig cfg = TrainConfig::from(exp);
  const int C = run.data.index.num_locations();

  TrainOutcome out;
  out.model = model::Model::init(model_config(exp, C), split_seed(exp.seed, "model"));
  out.velocity = out.model.zeros_like();
  std::uint64_t start = 0;
  if (run.resume) {
    if (run.resume->config_text != config::to_text(exp)) {
      throw StructuralError("resume checkpoint was written under a different configuration");
    }
    model::import_tensors(out.model, run.resume->params);
    model::import_tensors(out.velocity, run.resume->momentum);
    start = run.resume->step;
  }

  const int spe = steps_per_epoch(run.data, cfg);
  std::uint64_t total = static_cast<std::uint64_t>(cfg.epochs) * static_cast<std::uint64_t>(spe);
  if (cfg.max_steps > 0) total = std::min<std::uint64_t>(total, static_cast<std::uint64_t>(cfg.max_steps));

  std::ofstream log;
  if (!run.out_dir.empty()) {
    fs::create_directories(run.out_dir);
    log.open(run.out_dir / "train.log", run.resume ? std::ios::app : std::ios::trunc);
    if (!log) throw StructuralError("cannot write " + (run.out_dir / "train.log").string());
  }

  const std::uint64_t batch_seed = split_seed(exp.seed, "batches");
  model::Model grads = out.model.zeros_like();
  for (std::uint64_t step = start; step < total; ++step) {
    const int epoch = static_cast<int>(step / static_cast<std::uint64_t>(spe));
    StepLog entry;
    entry.step = step;
    entry.epoch = epoch;
    entry.lr = lr_at(cfg, epoch);
    entry.tau = out.model.tau[0];

    Rng rng(split_seed(batch_seed, {step}));
    const Batch batch = build_batch(run.data, run.captions, cfg, rng);
    grads.for_each([](const std::string&, Matrix& t) { t.set_zero(); });
    try {
      const StepResult r = compute_step(out.model, batch, &grads);
      entry.components = r.components;
      entry.total = r.total;
      sgd_step(out.model, grads, out.velocity, entry.lr, cfg);
    } catch (const TrainingError&) {
      if (!run.out_dir.empty()) {
        model::save_checkpoint(run.out_dir / "ckpt_last_good.bin",
                               make_checkpoint(exp, out.model, out.velocity, step / spe, step));
      }
      throw;
    }
    if (log) log << entry.line() << '\n';
    out.history.push_back(entry);

    const std::uint64_t done = step + 1;
    if (!run.out_dir.empty() && cfg.checkpoint_every > 0 && done % static_cast<std::uint64_t>(spe) == 0) {
      const std::uint64_t e = done / static_cast<std::uint64_t>(spe);
      if (e % static_cast<std::uint64_t>(cfg.checkpoint_every) == 0) {
        model::save_checkpoint(epoch_checkpoint(run.out_dir, e), make_checkpoint(exp, out.model, out.velocity, e, done));
      }
    }
  }
  out.steps = total;
  if (!run.out_dir.empty()) {
    const std::uint64_t e = (total + static_cast<std::uint64_t>(spe) - 1) / static_cast<std::uint64_t>(spe);
    out.final_checkpoint = epoch_checkpoint(run.out_dir, e);
    model::save_checkpoint(out.final_checkpoint, make_checkpoint(exp, out.model, out.velocity, e, total));
  }
  return out;
}

}  // namespace xvg::train
