#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xvg/image.hpp"

namespace xvg::weather {

enum class Kind { fog, rain, snow, dark, overexposure, wind };

std::string to_string(Kind k);
Kind parse_kind(const std::string& s);

struct Layer {
  Kind kind = Kind::fog;
  double intensity = 0.5;  // [0,1]
  std::uint64_t seed = 0;

  friend bool operator==(const Layer&, const Layer&) = default;
};

/// Ordered corruption layers, applied first to last. Empty means Normal.
struct WeatherSpec {
  std::vector<Layer> layers;

  bool is_normal() const { return layers.empty(); }
  friend bool operator==(const WeatherSpec&, const WeatherSpec&) = default;
};

struct NamedCondition {
  std::string name;
  WeatherSpec spec;
};

/// Fog blends toward this gray.
inline constexpr float kFogColor = 0.78f;

/// Applies every layer in order and clamps to [0,1]. Throws ArgumentError on
/// an intensity outside [0,1].
ImageTensor apply_weather(const ImageTensor& image, const WeatherSpec& spec);

/// The ten evaluation conditions: Normal, Fog, Rain, Snow, Fog+Rain,
/// Fog+Snow, Rain+Snow, Dark, Over-exp, Wind, each layer at `intensity`.
std::vector<NamedCondition> condition_suite(double intensity = 0.5);
const NamedCondition& find_condition(const std::vector<NamedCondition>& suite, const std::string& name);

/// Copy of `spec` with layer i seeded by split_seed(seed, {i}).
WeatherSpec reseeded(const WeatherSpec& spec, std::uint64_t seed);

// Spec files: one layer per line, `<kind> <intensity> [<seed>]`; blank lines
// and `#` comments are ignored. Kinds: fog rain snow dark overexposure wind.
WeatherSpec parse_spec(const std::string& text);
std::string format_spec(const WeatherSpec& spec);

}  // namespace xvg::weather
