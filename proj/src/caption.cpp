#include "xvg/caption.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "xvg/error.hpp"

namespace xvg::caption {

using json = nlohmann::json;

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '-'; }

/// Whole-word (or whole-phrase) occurrence, case-insensitive; `text` is lowercase.
bool contains_term(const std::string& text, const std::string& term) {
  const std::string t = lower(term);
  for (std::size_t pos = text.find(t); pos != std::string::npos; pos = text.find(t, pos + 1)) {
    const bool left = pos == 0 || !is_word_char(text[pos - 1]);
    const bool right = pos + t.size() >= text.size() || !is_word_char(text[pos + t.size()]);
    if (left && right) return true;
  }
  return false;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

std::string capitalized(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

}  // namespace

void validate_config(const CotConfig& cfg) {
  if (cfg.step_count != 0 && cfg.step_count != 2 && cfg.step_count != 4 && cfg.step_count != 6) {
    throw ArgumentError("CoT step count must be 0, 2, 4 or 6 (got " + std::to_string(cfg.step_count) + ")");
  }
  if (cfg.max_retries < 1) throw ArgumentError("max_retries must be positive");
}

std::vector<Prompt> build_prompts(const CotConfig& cfg) {
  validate_config(cfg);
  const std::string prior = "Weather prior: " + std::string(kWeatherPriorSlot) + ". ";
  switch (cfg.step_count) {
    case 0:
      return {{PromptStep::one_shot, Phase::single,
               "Describe the weather and the scene in this drone image in a single sentence."}};
    case 2:
      return {
          {PromptStep::weather_all, Phase::weather,
           "Assess the global visibility of this drone image, name the local atmospheric cues you observe, and "
           "finish with a line 'Weather: <label>'."},
          {PromptStep::spatial_all, Phase::spatial,
           prior + "Describe the scene layout: the buildings, roads and open areas and how they are arranged."},
      };
    case 4:
      return {
          {PromptStep::visibility_and_cues, Phase::weather,
           "Quantify the global visibility of this drone image ('Visibility is ...') and identify local "
           "atmospheric cues such as rain-streak reflections, fog diffusion, snow, darkness, glare or blur."},
          {PromptStep::weather_label, Phase::weather,
           "Integrate the visibility and the local cues into one weather label, written as 'Weather: <label>'."},
          {PromptStep::layout_and_elements, Phase::spatial,
           prior + "Describe the macro layout (building distribution, road orientation, open-area proportion) "
                   "and enumerate the structural elements with their counts and colors."},
          {PromptStep::topology, Phase::spatial,
           prior + "Describe the relative positions and topological relations between the main elements."},
      };
    default:
      return {
          {PromptStep::visibility, Phase::weather,
           "Step 1, global perception: assess the global visibility of this drone image and state the observable "
           "range as 'Visibility is <level>'."},
          {PromptStep::local_cues, Phase::weather,
           "Step 2, local analysis: identify local atmospheric cues such as rain-streak reflections, fog "
           "diffusion, snowflakes, darkness, glare or motion blur."},
          {PromptStep::weather_label, Phase::weather,
           "Step 3, synthesis: integrate the global visibility and the local cues and assign one weather label, "
           "written as 'Weather: <label>'."},
          {PromptStep::macro_layout, Phase::spatial,
           prior + "Step 4, macro layout: describe the building distribution, road orientation and the "
                   "proportion of open area."},
          {PromptStep::structural_elements, Phase::spatial,
           prior + "Step 5, structural elements: enumerate the buildings, pools, fields, trees and roads, with "
                   "counts, shapes and colors."},
          {PromptStep::topology, Phase::spatial,
           prior + "Step 6, topology: describe the relative positions and topological relations between the "
                   "largest elements."},
      };
  }
}

std::string condition_on_weather(const std::string& prompt_text, const std::string& weather_label) {
  std::string out = prompt_text;
  const auto pos = out.find(kWeatherPriorSlot);
  if (pos != std::string::npos) out.replace(pos, kWeatherPriorSlot.size(), weather_label);
  return out;
}

Lexicon Lexicon::defaults() {
  Lexicon l;
  l.uncertainty = {"possibly", "uncertain", "maybe", "perhaps", "unclear", "might be", "not sure", "hard to tell"};
  l.cues = {"fog",     "foggy",     "haze",      "hazy",      "mist",       "diffusion", "rain",     "rainy",
            "streak",  "streaks",   "drizzle",   "wet",       "reflections", "snow",     "snowy",    "snowflakes",
            "flakes",  "dark",      "darkness",  "night",     "low-light",  "glare",     "overexposed",
            "washed-out", "highlights", "blur",  "motion blur", "wind",     "windy",     "clear sky", "sunny",
            "crisp shadows", "shadows", "overcast"};
  return l;
}

ValidationReport validate_caption(const std::string& weather_text, const Lexicon& lexicon) {
  ValidationReport report;
  const std::string text = lower(weather_text);

  static const std::regex visibility_re(R"(visibility[^.;,\n]*)");
  std::smatch m;
  if (std::regex_search(text, m, visibility_re) && contains_term(text, "visibility")) {
    report.visibility_clause = trim(m.str());
  } else {
    report.reasons.push_back("missing visibility");
  }

  if (std::none_of(lexicon.cues.begin(), lexicon.cues.end(), [&](const auto& c) { return contains_term(text, c); })) {
    report.reasons.push_back("missing meteorological cue");
  }

  for (const auto& u : lexicon.uncertainty) {
    if (contains_term(text, u)) report.reasons.push_back("uncertain term: " + u);
  }

  static const std::regex label_re(R"(weather(?: label)?\s*[:=]\s*([a-z][a-z \-]*))");
  if (std::regex_search(text, m, label_re) && !trim(m[1].str()).empty()) {
    report.weather_label = trim(m[1].str());
  } else {
    report.reasons.push_back("missing weather label");
  }

  report.accepted = report.reasons.empty();
  return report;
}

// ---------------------------------------------------------------------------

namespace {

struct WeatherReading {
  std::string visibility;
  std::string range;
  std::vector<std::string> cues;
  std::string label;
};

WeatherReading read_weather(const weather::WeatherSpec& spec) {
  using weather::Kind;
  double loss = 0.0;
  std::vector<std::string> labels;
  WeatherReading r;
  for (const auto& l : spec.layers) {
    if (l.intensity <= 0.0) continue;
    const double t = l.intensity;
    switch (l.kind) {
      case Kind::fog:
        loss += 0.9 * t;
        r.cues.push_back(t > 0.6 ? "dense fog diffusion veils the ground" : "fog diffusion softens distant edges");
        labels.push_back("fog");
        break;
      case Kind::rain:
        loss += 0.25 * t;
        r.cues.push_back("slanted rain streaks and wet reflections");
        labels.push_back("rain");
        break;
      case Kind::snow:
        loss += 0.3 * t;
        r.cues.push_back("scattered snowflakes over a hazy ground");
        labels.push_back("snow");
        break;
      case Kind::dark:
        loss += 0.6 * t;
        r.cues.push_back("low-light darkness with crushed shadows");
        labels.push_back("night");
        break;
      case Kind::overexposure:
        loss += 0.3 * t;
        r.cues.push_back("strong glare and washed-out highlights");
        labels.push_back("overexposed glare");
        break;
      case Kind::wind:
        loss += 0.2 * t;
        r.cues.push_back("directional motion blur from strong wind");
        labels.push_back("windy");
        break;
    }
  }
  const double v = 1.0 - loss;
  if (v > 0.8) {
    r.visibility = "high";
    r.range = "the whole area is observable";
  } else if (v > 0.6) {
    r.visibility = "moderate";
    r.range = "distant structures are softened";
  } else if (v > 0.4) {
    r.visibility = "low";
    r.range = "only nearby structures are distinct";
  } else {
    r.visibility = "very low";
    r.range = "most structures are barely distinguishable";
  }
  if (r.cues.empty()) r.cues.push_back("no atmospheric obstruction, clear sky with crisp shadows");
  r.label = labels.empty() ? "clear" : join(labels, " and ");
  return r;
}

std::string counts_phrase(const data::SceneFacts& f) {
  std::vector<std::string> parts;
  auto add = [&](const char* key, const char* singular, const char* plural) {
    const auto it = f.counts.find(key);
    const int n = it == f.counts.end() ? 0 : it->second;
    if (n > 0) parts.push_back(std::to_string(n) + " " + (n == 1 ? singular : plural));
  };
  add("building", "building", "buildings");
  add("pool", "pool", "pools");
  add("field", "field", "fields");
  add("tree", "tree cluster", "tree clusters");
  add("road", "road", "roads");
  return join(parts, ", ");
}

std::string roads_phrase(const data::SceneFacts& f) {
  if (f.road_orientation == "none") return "there are no roads";
  if (f.road_orientation == "crossing") return "roads cross the area";
  return "roads run " + f.road_orientation;
}

}  // namespace

std::string TemplateClient::answer(PromptStep step) const {
  const WeatherReading w = read_weather(facts_.weather);
  const data::SceneFacts& f = facts_.scene;
  const int buildings = f.counts.count("building") ? f.counts.at("building") : 0;
  const std::string colors = join(f.building_colors, ", ");
  switch (step) {
    case PromptStep::one_shot:
      return "Visibility is " + w.visibility + " with " + w.cues.front() + ". Weather: " + w.label +
             ". An area with " + std::to_string(buildings) + " buildings.";
    case PromptStep::weather_all:
      return "Visibility is " + w.visibility + "; local cues: " + join(w.cues, "; ") + ". Weather: " + w.label + ".";
    case PromptStep::visibility_and_cues:
      return "Visibility is " + w.visibility + ", " + w.range + "; local cues: " + join(w.cues, "; ") + ".";
    case PromptStep::visibility:
      return "Visibility is " + w.visibility + "; " + w.range + ".";
    case PromptStep::local_cues:
      return capitalized(join(w.cues, "; ")) + ".";
    case PromptStep::weather_label:
      return "Weather: " + w.label + ".";
    case PromptStep::spatial_all:
      return "The scene contains " + counts_phrase(f) + "; " + roads_phrase(f) + ".";
    case PromptStep::layout_and_elements:
      return "Buildings concentrate in the " + f.building_layout + " and " + roads_phrase(f) + ". Elements: " +
             counts_phrase(f) + ".";
    case PromptStep::macro_layout:
      return "Buildings concentrate in the " + f.building_layout + "; " + roads_phrase(f) + "; the area is " +
             f.open_area + ".";
    case PromptStep::structural_elements:
      return "Elements: " + counts_phrase(f) + (colors.empty() ? "" : "; roofs are " + colors) + ".";
    case PromptStep::topology:
      return f.relations.empty() ? "The elements are spread evenly." : capitalized(join(f.relations, "; ")) + ".";
  }
  return {};
}

std::vector<std::string> TemplateClient::complete(const ImageTensor&, std::span<const Prompt> prompts) {
  std::vector<std::string> out;
  out.reserve(prompts.size());
  for (const auto& p : prompts) out.push_back(answer(p.step));
  return out;
}

ScriptedClient::ScriptedClient(std::vector<std::string> weather_attempts, std::string spatial_answer)
    : weather_attempts_(std::move(weather_attempts)), spatial_answer_(std::move(spatial_answer)) {
  if (weather_attempts_.empty()) throw ArgumentError("ScriptedClient needs at least one scripted answer");
}

std::vector<std::string> ScriptedClient::complete(const ImageTensor&, std::span<const Prompt> prompts) {
  std::vector<std::string> out;
  if (prompts.empty()) return out;
  if (prompts.front().phase == Phase::spatial) {
    out.assign(prompts.size(), spatial_answer_);
    return out;
  }
  const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(weather_calls_), weather_attempts_.size() - 1);
  ++weather_calls_;
  // Earlier prompts of the phase get a neutral acknowledgement; the scripted
  // text answers the last one.
  out.assign(prompts.size() - 1, "Noted.");
  out.push_back(weather_attempts_[i]);
  return out;
}

// ---------------------------------------------------------------------------

std::string to_string(Status s) { return s == Status::accepted ? "accepted" : "rejected_exhausted"; }

std::string CaptionRecord::full_text() const {
  if (spatial_text.empty() || spatial_text == weather_text) return weather_text;
  return weather_text + " " + spatial_text;
}

std::array<GroundTruthRegion, 3> extract_region_hints(std::span<const GroundTruthRegion> regions) {
  if (regions.size() < 3) {
    throw ArgumentError("extract_region_hints: need at least 3 regions, got " + std::to_string(regions.size()));
  }
  std::vector<GroundTruthRegion> sorted(regions.begin(), regions.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const GroundTruthRegion& a, const GroundTruthRegion& b) {
    if (a.box.area() != b.box.area()) return a.box.area() > b.box.area();
    if (a.box.cx != b.box.cx) return a.box.cx < b.box.cx;
    return a.box.cy < b.box.cy;
  });
  return {sorted[0], sorted[1], sorted[2]};
}

CaptionRecord generate_caption_record(const ImageTensor& image, const CaptionSubject& subject, LvlmClient& client,
                                      const CotConfig& cfg, const Lexicon& lexicon) {
  const auto prompts = build_prompts(cfg);
  std::vector<Prompt> weather_phase, spatial_phase;
  for (const auto& p : prompts) (p.phase == Phase::spatial ? spatial_phase : weather_phase).push_back(p);

  CaptionRecord rec;
  rec.location_id = subject.location_id;
  rec.image_ref = subject.image_ref;
  rec.cot_steps = cfg.step_count;

  ValidationReport report;
  for (rec.attempts = 1; rec.attempts <= cfg.max_retries; ++rec.attempts) {
    const auto answers = client.complete(image, weather_phase);
    if (answers.size() != weather_phase.size()) {
      throw StructuralError("LVLM client returned " + std::to_string(answers.size()) + " answers for " +
                            std::to_string(weather_phase.size()) + " prompts");
    }
    rec.weather_text = trim(join(answers, " "));
    report = validate_caption(rec.weather_text, lexicon);
    if (report.accepted) break;
  }
  if (!report.accepted) {
    rec.attempts = cfg.max_retries;
    rec.status = Status::rejected_exhausted;
    return rec;
  }

  rec.visibility_clause = report.visibility_clause;
  rec.weather_label = report.weather_label;
  if (spatial_phase.empty()) {
    rec.spatial_text = rec.weather_text;
  } else {
    for (auto& p : spatial_phase) p.text = condition_on_weather(p.text, rec.weather_label);
    const auto answers = client.complete(image, spatial_phase);
    if (answers.size() != spatial_phase.size()) throw StructuralError("LVLM client answer count mismatch");
    rec.spatial_text = trim(join(answers, " "));
    if (rec.spatial_text.empty()) {
      rec.status = Status::rejected_exhausted;
      return rec;
    }
  }
  const auto hints = extract_region_hints(subject.regions);
  for (std::size_t i = 0; i < 3; ++i) {
    rec.region_hints[i] = hints[i].label_text;
    rec.region_boxes[i] = hints[i];
  }
  rec.status = Status::accepted;
  return rec;
}

// ---------------------------------------------------------------------------

std::string to_json_line(const CaptionRecord& r) {
  json boxes = json::array();
  for (const auto& b : r.region_boxes) {
    boxes.push_back({{"label", b.label_text}, {"object_id", b.object_id}, {"box", {b.box.cx, b.box.cy, b.box.w, b.box.h}}});
  }
  json j = {{"location_id", r.location_id},
            {"image_ref", r.image_ref},
            {"split", r.split},
            {"view", r.view},
            {"condition", r.condition},
            {"cot_steps", r.cot_steps},
            {"weather_text", r.weather_text},
            {"visibility_clause", r.visibility_clause},
            {"weather_label", r.weather_label},
            {"spatial_text", r.spatial_text},
            {"region_hints", r.region_hints},
            {"region_boxes", boxes},
            {"attempts", r.attempts},
            {"status", to_string(r.status)}};
  return j.dump();
}

CaptionRecord from_json_line(const std::string& line) {
  try {
    const json j = json::parse(line);
    CaptionRecord r;
    r.location_id = j.at("location_id").get<int>();
    r.image_ref = j.at("image_ref").get<std::string>();
    r.split = j.at("split").get<std::string>();
    r.view = j.at("view").get<std::string>();
    r.condition = j.at("condition").get<std::string>();
    r.cot_steps = j.at("cot_steps").get<int>();
    r.weather_text = j.at("weather_text").get<std::string>();
    r.visibility_clause = j.at("visibility_clause").get<std::string>();
    r.weather_label = j.at("weather_label").get<std::string>();
    r.spatial_text = j.at("spatial_text").get<std::string>();
    r.region_hints = j.at("region_hints").get<std::array<std::string, 3>>();
    const auto& boxes = j.at("region_boxes");
    if (boxes.size() != 3) throw StructuralError("caption record must carry 3 region boxes");
    for (std::size_t i = 0; i < 3; ++i) {
      const auto& b = boxes[i];
      r.region_boxes[i].label_text = b.at("label").get<std::string>();
      r.region_boxes[i].object_id = b.at("object_id").get<int>();
      const auto v = b.at("box").get<std::array<double, 4>>();
      r.region_boxes[i].box = {v[0], v[1], v[2], v[3]};
    }
    r.attempts = j.at("attempts").get<int>();
    const auto status = j.at("status").get<std::string>();
    if (status == "accepted") r.status = Status::accepted;
    else if (status == "rejected_exhausted") r.status = Status::rejected_exhausted;
    else throw StructuralError("unknown caption status: " + status);
    return r;
  } catch (const json::exception& e) {
    throw StructuralError(std::string("malformed caption record: ") + e.what());
  }
}

void CaptionStore::append(const CaptionRecord& r) {
  const std::string line = to_json_line(r) + "\n";
  std::lock_guard lock(mutex_);
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  if (!out) throw StructuralError("cannot open caption store: " + path_.string());
  out << line;
}

std::vector<CaptionRecord> CaptionStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StructuralError("cannot open caption store: " + path.string());
  std::vector<CaptionRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) out.push_back(from_json_line(line));
  }
  return out;
}

CaptionIndex::CaptionIndex(const std::vector<CaptionRecord>& records) {
  for (const auto& r : records) insert(r);
}

void CaptionIndex::insert(const CaptionRecord& r) {
  records_[{r.split, r.view, r.location_id, r.condition}] = r;
}

const CaptionRecord* CaptionIndex::find(const std::string& split, const std::string& view, int location_id,
                                        const std::string& condition) const {
  const auto it = records_.find({split, view, location_id, condition});
  return it == records_.end() ? nullptr : &it->second;
}

}  // namespace xvg::caption
