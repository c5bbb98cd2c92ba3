#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "xvg/box.hpp"
#include "xvg/dataset.hpp"
#include "xvg/image.hpp"
#include "xvg/weather.hpp"

namespace xvg::caption {

/// Which reasoning step a prompt asks for. Mocks key their answers on this.
enum class PromptStep {
  one_shot,
  weather_all,
  visibility_and_cues,
  visibility,
  local_cues,
  weather_label,
  spatial_all,
  layout_and_elements,
  macro_layout,
  structural_elements,
  topology,
};

enum class Phase { single, weather, spatial };

struct Prompt {
  PromptStep step;
  Phase phase;
  std::string text;
};

/// Placeholder in spatial-phase prompts, replaced by the accepted weather label.
inline constexpr std::string_view kWeatherPriorSlot = "{weather_label}";

struct CotConfig {
  int step_count = 6;  // one of 0, 2, 4, 6
  int max_retries = 3;
};

void validate_config(const CotConfig& cfg);

/// Ordered prompts for a step count: 0 → one one-shot prompt; 2/4/6 → the
/// weather phase (1/2/3 prompts) followed by the spatial phase (1/2/3).
std::vector<Prompt> build_prompts(const CotConfig& cfg);

/// Spatial prompt text with the weather prior filled in.
std::string condition_on_weather(const std::string& prompt_text, const std::string& weather_label);

struct Lexicon {
  std::vector<std::string> uncertainty;
  std::vector<std::string> cues;

  static Lexicon defaults();
};

struct ValidationReport {
  bool accepted = false;
  std::vector<std::string> reasons;
  std::string visibility_clause;
  std::string weather_label;
};

/// Checks weather-phase text: a visibility clause, at least one cue term, no
/// uncertainty term, and an extractable `weather: <label>`. Pure.
ValidationReport validate_caption(const std::string& weather_text, const Lexicon& lexicon = Lexicon::defaults());

// ---------------------------------------------------------------------------

/// Anything that answers an ordered list of prompts about one image, one
/// text per prompt.
class LvlmClient {
 public:
  virtual ~LvlmClient() = default;
  virtual std::vector<std::string> complete(const ImageTensor& image, std::span<const Prompt> prompts) = 0;
};

/// What the template mock knows about the image it is asked about.
struct CaptionFacts {
  data::SceneFacts scene;
  weather::WeatherSpec weather;
};

/// Deterministic stand-in for an LVLM: answers are templated from the scene
/// facts and the applied weather, keyed by prompt step.
class TemplateClient final : public LvlmClient {
 public:
  explicit TemplateClient(CaptionFacts facts) : facts_(std::move(facts)) {}
  std::vector<std::string> complete(const ImageTensor& image, std::span<const Prompt> prompts) override;

  std::string answer(PromptStep step) const;

 private:
  CaptionFacts facts_;
};

/// Replays a fixed sequence of weather-phase answers, one per call; spatial
/// calls always get `spatial_answer`. Used to script retry behaviour.
class ScriptedClient final : public LvlmClient {
 public:
  ScriptedClient(std::vector<std::string> weather_attempts, std::string spatial_answer);
  std::vector<std::string> complete(const ImageTensor& image, std::span<const Prompt> prompts) override;
  int weather_calls() const { return weather_calls_; }

 private:
  std::vector<std::string> weather_attempts_;
  std::string spatial_answer_;
  int weather_calls_ = 0;
};

/// OpenAI-compatible chat-completions client. The prompts of one call are
/// sent as a single multi-turn conversation; the image rides on the first
/// user turn as a PNG data URL.
class HttpLvlmClient final : public LvlmClient {
 public:
  HttpLvlmClient(std::string endpoint, std::string api_key, std::string model);
  /// Reads XVG_LVLM_ENDPOINT (unless `endpoint` is non-empty), XVG_LVLM_API_KEY and XVG_LVLM_MODEL.
  static std::unique_ptr<HttpLvlmClient> from_environment(const std::string& endpoint = {});
  std::vector<std::string> complete(const ImageTensor& image, std::span<const Prompt> prompts) override;

 private:
  std::string base_;
  std::string path_;
  std::string api_key_;
  std::string model_;
};

// ---------------------------------------------------------------------------

enum class Status { accepted, rejected_exhausted };
std::string to_string(Status s);

struct CaptionRecord {
  int location_id = 0;
  std::string image_ref;
  std::string split = "train";
  std::string view = "drone";
  std::string condition = "Normal";
  int cot_steps = 6;
  std::string weather_text;
  std::string visibility_clause;
  std::string weather_label;
  std::string spatial_text;
  std::array<std::string, 3> region_hints;
  std::array<GroundTruthRegion, 3> region_boxes;
  int attempts = 0;
  Status status = Status::rejected_exhausted;

  /// Text fed to the text encoder: weather phase then spatial phase.
  std::string full_text() const;
  friend bool operator==(const CaptionRecord&, const CaptionRecord&) = default;
};

/// The three largest regions by area, descending; ties broken by (c_x, c_y)
/// ascending. Throws ArgumentError with fewer than three regions.
std::array<GroundTruthRegion, 3> extract_region_hints(std::span<const GroundTruthRegion> regions);

struct CaptionSubject {
  int location_id = 0;
  std::string image_ref;
  std::vector<GroundTruthRegion> regions;
};

/// Query → validate loop over the weather phase (at most max_retries
/// attempts); on acceptance the label conditions the spatial phase.
CaptionRecord generate_caption_record(const ImageTensor& image, const CaptionSubject& subject, LvlmClient& client,
                                      const CotConfig& cfg, const Lexicon& lexicon = Lexicon::defaults());

// ---------------------------------------------------------------------------
// Caption store: JSON Lines, one CaptionRecord per line, append-only. Fields:
// location_id, image_ref, split, view, condition, cot_steps, weather_text,
// visibility_clause, weather_label, spatial_text, region_hints[3],
// region_boxes[3] {label, object_id, box:[cx,cy,w,h]}, attempts, status.

std::string to_json_line(const CaptionRecord& r);
CaptionRecord from_json_line(const std::string& line);

class CaptionStore {
 public:
  explicit CaptionStore(std::filesystem::path path) : path_(std::move(path)) {}
  void append(const CaptionRecord& r);
  static std::vector<CaptionRecord> load(const std::filesystem::path& path);

 private:
  std::filesystem::path path_;
  std::mutex mutex_;
};

/// Lookup by (split, view, location_id, condition). Later records win.
class CaptionIndex {
 public:
  CaptionIndex() = default;
  explicit CaptionIndex(const std::vector<CaptionRecord>& records);
  void insert(const CaptionRecord& r);
  const CaptionRecord* find(const std::string& split, const std::string& view, int location_id,
                            const std::string& condition) const;
  std::size_t size() const { return records_.size(); }

 private:
  std::map<std::tuple<std::string, std::string, int, std::string>, CaptionRecord> records_;
};

}  // namespace xvg::caption
