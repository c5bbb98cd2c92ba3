#include <doctest.h>

#include <cmath>

#include "xvg/dataset.hpp"
#include "xvg/error.hpp"
#include "xvg/weather.hpp"

using namespace xvg;
using weather::Kind;

namespace {

ImageTensor scene_image() {
  const auto world = data::generate_toy_world(5, 1, 1);
  return data::render_views(world.locations[0], data::ViewKind::drone, 17, 48).image;
}

weather::WeatherSpec one(Kind k, double intensity, std::uint64_t seed = 3) { return {{{k, intensity, seed}}}; }

const Kind kAll[] = {Kind::fog, Kind::rain, Kind::snow, Kind::dark, Kind::overexposure, Kind::wind};

}  // namespace

TEST_CASE("empty spec and zero intensity are exact no-ops") {
  const ImageTensor img = scene_image();
  CHECK(weather::apply_weather(img, {}) == img);
  for (Kind k : kAll) {
    CAPTURE(weather::to_string(k));
    CHECK(weather::apply_weather(img, one(k, 0.0)) == img);
  }
}

TEST_CASE("every layer is deterministic, shape-preserving and stays in [0,1]") {
  const ImageTensor img = scene_image();
  for (Kind k : kAll) {
    for (double s : {0.1, 0.5, 1.0}) {
      CAPTURE(weather::to_string(k));
      CAPTURE(s);
      const auto a = weather::apply_weather(img, one(k, s));
      CHECK(a == weather::apply_weather(img, one(k, s)));
      CHECK(a.same_shape(img));
      CHECK(a.in_unit_range());
      // Wind blur length is a whole number of pixels, so weak wind can round to none.
      if (k != Kind::wind || s >= 0.5) CHECK(a != img);
    }
  }
}

TEST_CASE("intensity outside [0,1] is rejected") {
  const ImageTensor img = scene_image();
  CHECK_THROWS_AS(weather::apply_weather(img, one(Kind::rain, 1.5)), ArgumentError);
  CHECK_THROWS_AS(weather::apply_weather(img, one(Kind::fog, -0.1)), ArgumentError);
}

TEST_CASE("full fog pulls every pixel toward the fog color") {
  const ImageTensor img = scene_image();
  const auto fogged = weather::apply_weather(img, one(Kind::fog, 1.0));
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    CHECK(std::abs(fogged.pixels[i] - weather::kFogColor) <= std::abs(img.pixels[i] - weather::kFogColor) + 1e-7f);
  }
}

TEST_CASE("mean deviation from the fog color is non-increasing in fog intensity") {
  const ImageTensor img = scene_image();
  double previous = 1e9;
  for (int step = 0; step <= 10; ++step) {
    const auto f = weather::apply_weather(img, one(Kind::fog, step / 10.0));
    double dev = 0;
    for (float v : f.pixels) dev += std::abs(v - weather::kFogColor);
    dev /= static_cast<double>(f.pixels.size());
    CHECK(dev <= previous + 1e-12);
    previous = dev;
  }
}

TEST_CASE("condition suite has the ten table conditions") {
  const auto suite = weather::condition_suite();
  REQUIRE(suite.size() == 10);
  const char* names[] = {"Normal",    "Fog",       "Rain", "Snow",     "Fog+Rain",
                         "Fog+Snow",  "Rain+Snow", "Dark", "Over-exp", "Wind"};
  for (std::size_t i = 0; i < 10; ++i) CHECK(suite[i].name == names[i]);
  CHECK(suite[0].spec.is_normal());
  const auto& fr = weather::find_condition(suite, "Fog+Rain").spec.layers;
  REQUIRE(fr.size() == 2);
  CHECK(fr[0].kind == Kind::fog);
  CHECK(fr[1].kind == Kind::rain);
  for (const auto& c : suite)
    for (const auto& l : c.spec.layers) CHECK(l.intensity == 0.5);
  CHECK_THROWS_AS(weather::find_condition(suite, "Hail"), ArgumentError);
}

TEST_CASE("composites apply layers in order") {
  const ImageTensor img = scene_image();
  weather::WeatherSpec fog_then_dark{{{Kind::fog, 0.6, 1}, {Kind::dark, 0.6, 2}}};
  weather::WeatherSpec dark_then_fog{{{Kind::dark, 0.6, 2}, {Kind::fog, 0.6, 1}}};
  const auto sequential = weather::apply_weather(weather::apply_weather(img, one(Kind::fog, 0.6, 1)), one(Kind::dark, 0.6, 2));
  CHECK(weather::apply_weather(img, fog_then_dark) == sequential);
  CHECK(weather::apply_weather(img, fog_then_dark) != weather::apply_weather(img, dark_then_fog));
}

TEST_CASE("reseeding changes noise but not structure") {
  const auto spec = weather::find_condition(weather::condition_suite(0.7), "Rain+Snow").spec;
  const auto a = weather::reseeded(spec, 1), b = weather::reseeded(spec, 2);
  REQUIRE(a.layers.size() == 2);
  CHECK(a.layers[0].kind == Kind::rain);
  CHECK(a.layers[0].intensity == 0.7);
  CHECK(a.layers[0].seed != b.layers[0].seed);
  CHECK(a.layers[0].seed != a.layers[1].seed);
  CHECK(weather::reseeded(spec, 1) == a);
}

TEST_CASE("spec files round trip") {
  const weather::WeatherSpec spec{{{Kind::dark, 0.25, 9}, {Kind::rain, 1.0, 0}, {Kind::fog, 0.5, 12345}}};
  CHECK(weather::parse_spec(weather::format_spec(spec)) == spec);
  const auto parsed = weather::parse_spec("# Dark+Rain+Fog\n\ndark 0.4\nrain 0.6 7\nfog 0.3\n");
  REQUIRE(parsed.layers.size() == 3);
  CHECK(parsed.layers[1].seed == 7);
  CHECK_THROWS_AS(weather::parse_spec("hail 0.5\n"), ArgumentError);
  CHECK_THROWS_AS(weather::parse_spec("fog\n"), ArgumentError);
}
