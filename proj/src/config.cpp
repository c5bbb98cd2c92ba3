#include "xvg/config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "xvg/error.hpp"

namespace xvg::config {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

double to_double(const std::string& s) {
  double v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ArgumentError("not a number: '" + s + "'");
  return v;
}

template <class Int>
Int to_int(const std::string& s) {
  Int v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ArgumentError("not an integer: '" + s + "'");
  return v;
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ArgumentError("not a boolean: '" + s + "'");
}

std::string fmt_drops(const std::vector<std::pair<int, double>>& drops) {
  std::string out;
  for (std::size_t i = 0; i < drops.size(); ++i) {
    out += (i ? "," : "") + std::to_string(drops[i].first) + ":" + fmt(drops[i].second);
  }
  return out;
}

std::vector<std::pair<int, double>> parse_drops(const std::string& s) {
  std::vector<std::pair<int, double>> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ArgumentError("lr drop must be <epoch>:<factor>, got '" + item + "'");
    out.emplace_back(to_int<int>(trim(item.substr(0, colon))), to_double(trim(item.substr(colon + 1))));
  }
  return out;
}

struct Key {
  KeyDoc doc;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define XVG_STR(field) \
  [](ExperimentConfig& c, const std::string& v) { c.field = v; }, [](const ExperimentConfig& c) { return c.field; }
#define XVG_INT(field)                                                             \
  [](ExperimentConfig& c, const std::string& v) { c.field = to_int<int>(v); },     \
      [](const ExperimentConfig& c) { return std::to_string(c.field); }
#define XVG_DBL(field)                                                         \
  [](ExperimentConfig& c, const std::string& v) { c.field = to_double(v); }, \
      [](const ExperimentConfig& c) { return fmt(c.field); }
#define XVG_BOOL(field)                                                      \
  [](ExperimentConfig& c, const std::string& v) { c.field = to_bool(v); }, \
      [](const ExperimentConfig& c) { return std::string(c.field ? "true" : "false"); }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      {{"experiment.name", "run name used in reports"}, XVG_STR(name)},
      {{"experiment.output_root", "directory for everything the run writes"}, XVG_STR(output_root)},
      {{"experiment.seed", "global seed; per-module seeds are split from it"},
       [](ExperimentConfig& c, const std::string& v) { c.seed = to_int<std::uint64_t>(v); },
       [](const ExperimentConfig& c) { return std::to_string(c.seed); }},
      {{"dataset.root", "dataset tree with train/ and test/ splits"}, XVG_STR(dataset_root)},
      {{"dataset.locations", "toy world: number of locations"}, XVG_INT(locations)},
      {{"dataset.drones_per_location", "toy world: drone views per location (train)"}, XVG_INT(drones_per_location)},
      {{"dataset.test_drones_per_location", "toy world: held-out drone views per location (test)"},
       XVG_INT(test_drones_per_location)},
      {{"dataset.image_size", "square image side the encoders consume"}, XVG_INT(image_size)},
      {{"weather.intensity", "intensity of every layer in the 10-condition suite"}, XVG_DBL(weather_intensity)},
      {{"caption.store", "caption JSONL file"}, XVG_STR(caption_store)},
      {{"caption.cot_steps", "NAN, 0, 2, 4 or 6"},
       [](ExperimentConfig& c, const std::string& v) { c.cot_steps = parse_cot_steps(v); },
       [](const ExperimentConfig& c) { return format_cot_steps(c.cot_steps); }},
      {{"caption.max_retries", "weather-phase attempts before a record is rejected"}, XVG_INT(max_retries)},
      {{"caption.client", "mock, http (endpoint from XVG_LVLM_ENDPOINT), or an http(s) chat-completions URL"}, XVG_STR(caption_client)},
      {{"encoder.patch_size", "visual patch side in pixels"}, XVG_INT(encoder.patch_size)},
      {{"encoder.visual_hidden", "visual hidden width"}, XVG_INT(encoder.visual_hidden)},
      {{"encoder.embed_dim", "embedding width D"}, XVG_INT(encoder.embed_dim)},
      {{"encoder.token_dim", "token embedding width"}, XVG_INT(encoder.token_dim)},
      {{"encoder.joint_hidden", "joint encoder hidden width"}, XVG_INT(encoder.joint_hidden)},
      {{"encoder.joint_dim", "joint vector width d (0 means D)"}, XVG_INT(encoder.joint_dim)},
      {{"encoder.freeze", "keep encoder weights fixed during training"}, XVG_BOOL(freeze_encoders)},
      {{"fusion.mode", "concat, static or dynamic"},
       [](ExperimentConfig& c, const std::string& v) { c.fusion_mode = fusion::parse_mode(v); },
       [](const ExperimentConfig& c) { return fusion::to_string(c.fusion_mode); }},
      {{"fusion.reduction_ratio", "gate bottleneck ratio r (must divide D)"}, XVG_INT(reduction_ratio)},
      {{"train.base_lr", "learning rate before the first drop"}, XVG_DBL(base_lr)},
      {{"train.head_lr_scale", "learning-rate multiplier for the gate, box, match and classifier heads"},
       XVG_DBL(head_lr_scale)},
      {{"train.momentum", "SGD momentum"}, XVG_DBL(momentum)},
      {{"train.weight_decay", "coupled L2 weight decay"}, XVG_DBL(weight_decay)},
      {{"train.epochs", "number of epochs"}, XVG_INT(epochs)},
      {{"train.lr_drops", "comma list of <epoch>:<factor of base_lr>"},
       [](ExperimentConfig& c, const std::string& v) { c.lr_drops = parse_drops(v); },
       [](const ExperimentConfig& c) { return fmt_drops(c.lr_drops); }},
      {{"train.batch_size", "locations per batch (capped at the location count)"}, XVG_INT(batch_size)},
      {{"train.max_steps", "stop after this many steps (0: all epochs)"}, XVG_INT(max_steps)},
      {{"train.checkpoint_every", "epochs between checkpoints (0: final only)"}, XVG_INT(checkpoint_every)},
      {{"train.tau_init", "initial contrastive temperature"}, XVG_DBL(tau_init)},
      {{"train.tau_min", "lower clamp for the temperature"}, XVG_DBL(tau_min)},
      {{"train.tau_max", "upper clamp for the temperature"}, XVG_DBL(tau_max)},
      {{"augment.crop_min_fraction", "smallest random-crop side as a fraction of the image"},
       XVG_DBL(crop_min_fraction)},
      {{"augment.flip", "random horizontal flips"}, XVG_BOOL(flip)},
      {{"eval.satellite_text", "generated or neutral_constant"}, XVG_STR(satellite_text)},
  };
  return table;
}

#undef XVG_STR
#undef XVG_INT
#undef XVG_DBL
#undef XVG_BOOL

const Key& find_key(const std::string& name) {
  for (const auto& k : keys())
    if (k.doc.key == name) return k;
  throw ArgumentError("unknown config key: " + name);
}

}  // namespace

const std::vector<KeyDoc>& schema() {
  static const std::vector<KeyDoc> docs = [] {
    std::vector<KeyDoc> d;
    for (const auto& k : keys()) d.push_back(k.doc);
    return d;
  }();
  return docs;
}

std::string format_cot_steps(int steps) { return steps == kNoText ? "NAN" : std::to_string(steps); }

int parse_cot_steps(const std::string& s) {
  if (s == "NAN" || s == "nan") return kNoText;
  if (s == "0" || s == "2" || s == "4" || s == "6") return s[0] - '0';
  throw ArgumentError("caption.cot_steps must be NAN, 0, 2, 4 or 6 (got '" + s + "')");
}

void apply_override(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  find_key(key).set(cfg, trim(value));
  cfg.encoder.image_size = cfg.image_size;
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(lineno) + ": ";
    if (eq == std::string::npos) throw ArgumentError(where + "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (!seen.insert(key).second) throw ArgumentError(where + "duplicate key " + key);
    try {
      apply_override(cfg, key, line.substr(eq + 1));
    } catch (const ArgumentError& e) {
      throw ArgumentError(where + e.what());
    }
  }
  validate(cfg);
  return cfg;
}

std::string to_text(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& k : keys()) out += k.doc.key + " = " + k.get(cfg) + "\n";
  return out;
}

void validate(const ExperimentConfig& c) {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ArgumentError(msg);
  };
  require(c.locations >= 1 && c.drones_per_location >= 1 && c.test_drones_per_location >= 1,
          "dataset counts must be positive");
  require(c.weather_intensity >= 0.0 && c.weather_intensity <= 1.0, "weather.intensity must lie in [0,1]");
  require(c.max_retries >= 1, "caption.max_retries must be positive");
  c.encoder.validate();
  require(c.encoder.image_size == c.image_size, "encoder image size must mirror dataset.image_size");
  require(c.reduction_ratio >= 1 && c.encoder.embed_dim % c.reduction_ratio == 0,
          "fusion.reduction_ratio must divide encoder.embed_dim");
  require(c.base_lr > 0.0, "train.base_lr must be positive");
  require(c.head_lr_scale > 0.0, "train.head_lr_scale must be positive");
  require(c.momentum >= 0.0 && c.momentum < 1.0, "train.momentum must lie in [0,1)");
  require(c.weight_decay >= 0.0, "train.weight_decay must be non-negative");
  require(c.epochs >= 1, "train.epochs must be at least 1");
  for (std::size_t i = 0; i < c.lr_drops.size(); ++i) {
    require(c.lr_drops[i].first >= 1 && c.lr_drops[i].second > 0.0, "train.lr_drops entries must be positive");
    require(i == 0 || c.lr_drops[i].first > c.lr_drops[i - 1].first, "train.lr_drops must be sorted ascending");
  }
  require(c.batch_size >= 2, "train.batch_size must be at least 2");
  require(c.max_steps >= 0 && c.checkpoint_every >= 0, "train step counts must be non-negative");
  require(c.tau_min > 0.0 && c.tau_min <= c.tau_init && c.tau_init <= c.tau_max, "need 0 < tau_min <= tau_init <= tau_max");
  require(c.crop_min_fraction > 0.0 && c.crop_min_fraction <= 1.0, "augment.crop_min_fraction must lie in (0,1]");
  require(c.satellite_text == "generated" || c.satellite_text == "neutral_constant",
          "eval.satellite_text must be generated or neutral_constant");
}

}  // namespace xvg::config
