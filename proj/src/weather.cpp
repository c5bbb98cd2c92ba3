#include "xvg/weather.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "xvg/error.hpp"
#include "xvg/kernels.hpp"
#include "xvg/seed.hpp"

namespace xvg::weather {

namespace {

double pixel_scale(const ImageTensor& img) { return std::max(img.width, img.height) / 64.0; }

/// Smooth value noise in [0,1]: a seeded 5×5 lattice, smoothstep-interpolated.
std::vector<float> low_frequency_mask(int h, int w, std::uint64_t seed) {
  constexpr int kLattice = 5;
  Rng rng(split_seed(seed, "fog-mask"));
  double lattice[kLattice][kLattice];
  for (auto& row : lattice)
    for (double& v : row) v = uniform(rng, 0.0, 1.0);
  auto smooth = [](double t) { return t * t * (3 - 2 * t); };
  std::vector<float> mask(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y) {
    const double fy = (y + 0.5) / h * (kLattice - 1);
    const int iy = std::min(static_cast<int>(fy), kLattice - 2);
    const double ty = smooth(fy - iy);
    for (int x = 0; x < w; ++x) {
      const double fx = (x + 0.5) / w * (kLattice - 1);
      const int ix = std::min(static_cast<int>(fx), kLattice - 2);
      const double tx = smooth(fx - ix);
      const double top = lattice[iy][ix] * (1 - tx) + lattice[iy][ix + 1] * tx;
      const double bot = lattice[iy + 1][ix] * (1 - tx) + lattice[iy + 1][ix + 1] * tx;
      mask[static_cast<std::size_t>(y) * w + x] = static_cast<float>(top * (1 - ty) + bot * ty);
    }
  }
  return mask;
}

void fog(ImageTensor& img, double t, std::uint64_t seed) {
  const auto mask = low_frequency_mask(img.height, img.width, seed);
  std::vector<float> alpha(img.pixels.size());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const auto a = static_cast<float>(t * (0.55 + 0.45 * mask[i]));
    alpha[3 * i] = alpha[3 * i + 1] = alpha[3 * i + 2] = a;
  }
  kernels::blend_toward(img.pixels, alpha, kFogColor);
}

void blend_pixel(ImageTensor& img, int x, int y, float target, float a) {
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
  for (int c = 0; c < 3; ++c) {
    float& p = img.at(y, x, c);
    p += a * (target - p);
  }
}

// Streak and flake sets are generated at full capacity and truncated, so a
// higher intensity always draws a superset of a lower one.
void rain(ImageTensor& img, double t, std::uint64_t seed) {
  kernels::affine_clamp(img.pixels, static_cast<float>(1.0 - 0.15 * t), 0.0f);
  Rng rng(split_seed(seed, "rain"));
  const double s = pixel_scale(img);
  const double slope = uniform(rng, 0.15, 0.35) * (uniform_index(rng, 2) ? 1 : -1);
  const int capacity = img.width * img.height / 40;
  const int count = static_cast<int>(std::lround(t * capacity));
  for (int i = 0; i < capacity; ++i) {
    const double x0 = uniform(rng, 0, img.width);
    const double y0 = uniform(rng, 0, img.height);
    const double len = uniform(rng, 4, 9) * s;
    if (i >= count) continue;
    for (int k = 0; k < static_cast<int>(len); ++k) {
      blend_pixel(img, static_cast<int>(x0 + slope * k), static_cast<int>(y0 + k), 0.85f, 0.55f);
    }
  }
}

void snow(ImageTensor& img, double t, std::uint64_t seed) {
  std::vector<float> haze(img.pixels.size(), static_cast<float>(0.15 * t));
  kernels::blend_toward(img.pixels, haze, 0.9f);
  Rng rng(split_seed(seed, "snow"));
  const double s = pixel_scale(img);
  const int capacity = img.width * img.height / 30;
  const int count = static_cast<int>(std::lround(t * capacity));
  for (int i = 0; i < capacity; ++i) {
    const double cx = uniform(rng, 0, img.width);
    const double cy = uniform(rng, 0, img.height);
    const double r = uniform(rng, 0.6, 1.6) * s;
    if (i >= count) continue;
    const int x0 = static_cast<int>(std::floor(cx - r)), x1 = static_cast<int>(std::ceil(cx + r));
    const int y0 = static_cast<int>(std::floor(cy - r)), y1 = static_cast<int>(std::ceil(cy + r));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const double d = std::hypot(x + 0.5 - cx, y + 0.5 - cy);
        if (d <= r) blend_pixel(img, x, y, 1.0f, static_cast<float>(0.85 * (1.0 - 0.5 * d / r)));
      }
  }
}

void dark(ImageTensor& img, double t) {
  const double gamma = 1.0 + 1.5 * t;
  for (float& p : img.pixels) p = static_cast<float>(std::pow(static_cast<double>(p), gamma));
  kernels::affine_clamp(img.pixels, static_cast<float>(1.0 - 0.7 * t), 0.0f);
}

void overexpose(ImageTensor& img, double t) {
  kernels::affine_clamp(img.pixels, static_cast<float>(1.0 + 2.0 * t), static_cast<float>(0.2 * t));
}

void wind(ImageTensor& img, double t, std::uint64_t seed) {
  Rng rng(split_seed(seed, "wind"));
  const double angle = uniform(rng, 0.0, std::numbers::pi);
  const int taps = 1 + static_cast<int>(std::lround(8.0 * t * pixel_scale(img)));
  if (taps <= 1) return;
  const double dx = std::cos(angle), dy = std::sin(angle);
  const ImageTensor src = img;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      float acc[3] = {0, 0, 0};
      for (int k = 0; k < taps; ++k) {
        const double o = k - (taps - 1) / 2.0;
        const int sx = std::clamp(static_cast<int>(std::lround(x + o * dx)), 0, img.width - 1);
        const int sy = std::clamp(static_cast<int>(std::lround(y + o * dy)), 0, img.height - 1);
        for (int c = 0; c < 3; ++c) acc[c] += src.at(sy, sx, c);
      }
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = acc[c] / static_cast<float>(taps);
    }
}

}  // namespace

std::string to_string(Kind k) {
  switch (k) {
    case Kind::fog: return "fog";
    case Kind::rain: return "rain";
    case Kind::snow: return "snow";
    case Kind::dark: return "dark";
    case Kind::overexposure: return "overexposure";
    case Kind::wind: return "wind";
  }
  return "unknown";
}

Kind parse_kind(const std::string& s) {
  for (Kind k : {Kind::fog, Kind::rain, Kind::snow, Kind::dark, Kind::overexposure, Kind::wind})
    if (to_string(k) == s) return k;
  throw ArgumentError("unknown weather kind: " + s);
}

ImageTensor apply_weather(const ImageTensor& image, const WeatherSpec& spec) {
  for (const auto& layer : spec.layers) {
    if (!(layer.intensity >= 0.0 && layer.intensity <= 1.0)) {
      throw ArgumentError("weather intensity outside [0,1] for layer " + to_string(layer.kind));
    }
  }
  ImageTensor out = image;
  for (const auto& layer : spec.layers) {
    const double t = layer.intensity;
    if (t == 0.0) continue;
    switch (layer.kind) {
      case Kind::fog: fog(out, t, layer.seed); break;
      case Kind::rain: rain(out, t, layer.seed); break;
      case Kind::snow: snow(out, t, layer.seed); break;
      case Kind::dark: dark(out, t); break;
      case Kind::overexposure: overexpose(out, t); break;
      case Kind::wind: wind(out, t, layer.seed); break;
    }
  }
  // Exact for in-range values (x·1 + 0); catches rounding overshoot.
  kernels::affine_clamp(out.pixels, 1.0f, 0.0f);
  return out;
}

std::vector<NamedCondition> condition_suite(double intensity) {
  auto spec = [&](std::initializer_list<Kind> kinds) {
    WeatherSpec s;
    std::uint64_t i = 0;
    for (Kind k : kinds) s.layers.push_back({k, intensity, split_seed(0x5eedULL, {i++})});
    return s;
  };
  return {
      {"Normal", {}},
      {"Fog", spec({Kind::fog})},
      {"Rain", spec({Kind::rain})},
      {"Snow", spec({Kind::snow})},
      {"Fog+Rain", spec({Kind::fog, Kind::rain})},
      {"Fog+Snow", spec({Kind::fog, Kind::snow})},
      {"Rain+Snow", spec({Kind::rain, Kind::snow})},
      {"Dark", spec({Kind::dark})},
      {"Over-exp", spec({Kind::overexposure})},
      {"Wind", spec({Kind::wind})},
  };
}

const NamedCondition& find_condition(const std::vector<NamedCondition>& suite, const std::string& name) {
  for (const auto& c : suite)
    if (c.name == name) return c;
  throw ArgumentError("unknown weather condition: " + name);
}

WeatherSpec reseeded(const WeatherSpec& spec, std::uint64_t seed) {
  WeatherSpec out = spec;
  for (std::size_t i = 0; i < out.layers.size(); ++i) out.layers[i].seed = split_seed(seed, {i});
  return out;
}

WeatherSpec parse_spec(const std::string& text) {
  WeatherSpec spec;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string kind;
    if (!(fields >> kind)) continue;
    Layer layer;
    layer.kind = parse_kind(kind);
    if (!(fields >> layer.intensity)) {
      throw ArgumentError("weather spec line " + std::to_string(lineno) + ": missing intensity");
    }
    if (!(layer.intensity >= 0.0 && layer.intensity <= 1.0)) {
      throw ArgumentError("weather spec line " + std::to_string(lineno) + ": intensity outside [0,1]");
    }
    std::uint64_t seed = 0;
    if (fields >> seed) layer.seed = seed;
    std::string extra;
    if (fields >> extra) throw ArgumentError("weather spec line " + std::to_string(lineno) + ": trailing field");
    spec.layers.push_back(layer);
  }
  return spec;
}

std::string format_spec(const WeatherSpec& spec) {
  std::ostringstream out;
  out.precision(17);
  for (const auto& l : spec.layers) out << to_string(l.kind) << ' ' << l.intensity << ' ' << l.seed << '\n';
  return out.str();
}

}  // namespace xvg::weather
