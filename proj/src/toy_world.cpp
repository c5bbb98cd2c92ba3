#include <algorithm>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "xvg/dataset.hpp"
#include "xvg/error.hpp"
#include "xvg/seed.hpp"

namespace xvg::data {

using json = nlohmann::json;

namespace {

// All objects stay inside this square so that every drone pose keeps them
// fully in frame (see ViewTransform::from_jitter).
constexpr double kMin = 0.18;
constexpr double kMax = 0.82;

struct PaletteColor {
  const char* name;
  std::array<float, 3> rgb;
};

constexpr PaletteColor kBuildingColors[] = {
    {"red", {0.78f, 0.18f, 0.15f}},   {"white", {0.93f, 0.93f, 0.9f}}, {"gray", {0.52f, 0.52f, 0.55f}},
    {"orange", {0.92f, 0.55f, 0.12f}}, {"brown", {0.45f, 0.28f, 0.16f}}, {"purple", {0.5f, 0.25f, 0.6f}},
};
constexpr PaletteColor kBackgrounds[] = {
    {"grass", {0.36f, 0.56f, 0.3f}},
    {"dry", {0.62f, 0.57f, 0.4f}},
    {"park", {0.3f, 0.47f, 0.34f}},
    {"soil", {0.52f, 0.43f, 0.33f}},
};
constexpr PaletteColor kFieldColors[] = {{"yellow", {0.85f, 0.78f, 0.35f}}, {"green", {0.45f, 0.7f, 0.3f}}};
constexpr PaletteColor kPool{"blue", {0.2f, 0.45f, 0.85f}};
constexpr PaletteColor kTree{"dark green", {0.12f, 0.32f, 0.14f}};
constexpr PaletteColor kRoad{"asphalt", {0.25f, 0.25f, 0.27f}};

template <std::size_t N>
const PaletteColor& pick(const PaletteColor (&arr)[N], Rng& rng) {
  return arr[uniform_index(rng, N)];
}

bool overlaps(const Box& a, const Box& b, double margin) {
  return a.x1() - margin < b.x2() && b.x1() - margin < a.x2() && a.y1() - margin < b.y2() && b.y1() - margin < a.y2();
}

std::string road_orientation_of(const SceneObject& o) {
  const double dx = std::abs(o.segment[2] - o.segment[0]);
  const double dy = std::abs(o.segment[3] - o.segment[1]);
  if (dx < 0.25 * dy) return "north-south";
  if (dy < 0.25 * dx) return "east-west";
  return "diagonal";
}

std::string compass(double dx, double dy) {
  // Image y grows southward.
  if (std::hypot(dx, dy) < 0.05) return "right next to";
  const double angle = std::atan2(-dy, dx);  // 0 = east, counter-clockwise
  static const char* names[] = {"east of", "north-east of", "north of", "north-west of",
                                "west of", "south-west of", "south of", "south-east of"};
  int sector = static_cast<int>(std::lround(angle / (std::numbers::pi / 4)));
  sector = ((sector % 8) + 8) % 8;
  return names[sector];
}

std::string region_name(double x, double y) {
  if (std::hypot(x - 0.5, y - 0.5) < 0.08) return "center";
  std::string ns = y < 0.5 ? "north" : "south";
  std::string ew = x < 0.5 ? "west" : "east";
  if (std::abs(y - 0.5) < 0.05) return ew;
  if (std::abs(x - 0.5) < 0.05) return ns;
  return ns + "-" + ew;
}

Box random_box(Rng& rng, double wmin, double wmax, double hmin, double hmax) {
  const double w = uniform(rng, wmin, wmax);
  const double h = uniform(rng, hmin, hmax);
  const double cx = uniform(rng, kMin + w / 2, kMax - w / 2);
  const double cy = uniform(rng, kMin + h / 2, kMax - h / 2);
  return {cx, cy, w, h};
}

bool covered_by(const SceneObject& o, double x, double y) {
  if (o.kind == ObjectKind::road) {
    const double ax = o.segment[0], ay = o.segment[1], bx = o.segment[2], by = o.segment[3];
    const double vx = bx - ax, vy = by - ay;
    const double t = std::clamp(((x - ax) * vx + (y - ay) * vy) / (vx * vx + vy * vy), 0.0, 1.0);
    return std::hypot(x - (ax + t * vx), y - (ay + t * vy)) <= o.thickness / 2;
  }
  return x >= o.box.x1() && x < o.box.x2() && y >= o.box.y1() && y < o.box.y2();
}

int paint_order(ObjectKind k) {
  switch (k) {
    case ObjectKind::field: return 0;
    case ObjectKind::road: return 1;
    case ObjectKind::pool: return 2;
    case ObjectKind::building: return 3;
    case ObjectKind::tree: return 4;
  }
  return 5;
}

ToyScene generate_scene(std::uint64_t world_seed, int location_id) {
  ToyScene scene;
  scene.location_id = location_id;
  scene.seed = split_seed(world_seed, {static_cast<std::uint64_t>(location_id)});
  Rng rng(scene.seed);
  scene.background = pick(kBackgrounds, rng).rgb;

  auto& objs = scene.objects;
  auto place = [&](SceneObject o, double margin) {
    for (int attempt = 0; attempt < 60; ++attempt) {
      const bool clash = std::any_of(objs.begin(), objs.end(), [&](const SceneObject& other) {
        return other.kind != ObjectKind::road && other.kind != ObjectKind::field && overlaps(o.box, other.box, margin);
      });
      if (!clash) {
        objs.push_back(o);
        return true;
      }
      o.box = random_box(rng, o.box.w, o.box.w, o.box.h, o.box.h);
    }
    return false;
  };

  // Roads first: they are painted under everything else.
  const int roads = static_cast<int>(uniform_index(rng, 3));
  for (int i = 0; i < roads; ++i) {
    SceneObject r;
    r.kind = ObjectKind::road;
    r.color_name = kRoad.name;
    r.rgb = kRoad.rgb;
    r.thickness = uniform(rng, 0.045, 0.07);
    const auto style = uniform_index(rng, 3);
    const double lo = 0.22, hi = 0.78;
    const double p = uniform(rng, 0.3, 0.7);
    if (style == 0) r.segment = {p, lo, p + uniform(rng, -0.05, 0.05), hi};
    else if (style == 1) r.segment = {lo, p, hi, p + uniform(rng, -0.05, 0.05)};
    else if (uniform_index(rng, 2) == 0) r.segment = {lo, lo, hi, hi};
    else r.segment = {lo, hi, hi, lo};
    const double t = r.thickness / 2;
    r.box = Box::from_corners(std::min(r.segment[0], r.segment[2]) - t, std::min(r.segment[1], r.segment[3]) - t,
                              std::max(r.segment[0], r.segment[2]) + t, std::max(r.segment[1], r.segment[3]) + t);
    objs.push_back(r);
  }
  if (uniform_index(rng, 2) == 0) {
    SceneObject f;
    f.kind = ObjectKind::field;
    const auto& c = pick(kFieldColors, rng);
    f.color_name = c.name;
    f.rgb = c.rgb;
    f.box = random_box(rng, 0.2, 0.3, 0.2, 0.3);
    objs.push_back(f);
  }
  const int buildings = 2 + static_cast<int>(uniform_index(rng, 4));
  for (int i = 0; i < buildings; ++i) {
    SceneObject b;
    b.kind = ObjectKind::building;
    const auto& c = pick(kBuildingColors, rng);
    b.color_name = c.name;
    b.rgb = c.rgb;
    b.box = random_box(rng, 0.08, 0.2, 0.08, 0.2);
    place(b, 0.02);
  }
  const int pools = static_cast<int>(uniform_index(rng, 3));
  for (int i = 0; i < pools; ++i) {
    SceneObject p;
    p.kind = ObjectKind::pool;
    p.color_name = kPool.name;
    p.rgb = kPool.rgb;
    p.box = random_box(rng, 0.06, 0.12, 0.06, 0.12);
    place(p, 0.02);
  }
  const int trees = static_cast<int>(uniform_index(rng, 5));
  for (int i = 0; i < trees; ++i) {
    SceneObject t;
    t.kind = ObjectKind::tree;
    t.color_name = kTree.name;
    t.rgb = kTree.rgb;
    t.box = random_box(rng, 0.04, 0.06, 0.04, 0.06);
    place(t, 0.01);
  }
  std::stable_sort(objs.begin(), objs.end(),
                   [](const SceneObject& a, const SceneObject& b) { return paint_order(a.kind) < paint_order(b.kind); });
  scene.facts = derive_facts(objs);
  return scene;
}

std::array<double, 2> rotate(double x, double y, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * x - s * y, s * x + c * y};
}

float texture_noise(std::uint64_t seed, double sx, double sy) {
  const auto qx = static_cast<std::uint64_t>(static_cast<std::int64_t>(std::floor(sx * 96.0)) + (1 << 20));
  const auto qy = static_cast<std::uint64_t>(static_cast<std::int64_t>(std::floor(sy * 96.0)) + (1 << 20));
  const std::uint64_t h = split_seed(seed, {qx, qy});
  return static_cast<float>((static_cast<double>(h >> 11) * 0x1.0p-53 - 0.5) * 0.08);
}

}  // namespace

std::string to_string(ObjectKind k) {
  switch (k) {
    case ObjectKind::building: return "building";
    case ObjectKind::pool: return "pool";
    case ObjectKind::field: return "field";
    case ObjectKind::tree: return "tree";
    case ObjectKind::road: return "road";
  }
  return "object";
}

std::string SceneObject::label() const {
  switch (kind) {
    case ObjectKind::road: return road_orientation_of(*this) + " road";
    case ObjectKind::tree: return "tree cluster";
    default: return color_name + " " + to_string(kind);
  }
}

SceneFacts derive_facts(const std::vector<SceneObject>& objects) {
  SceneFacts f;
  for (const char* k : {"building", "pool", "field", "tree", "road"}) f.counts[k] = 0;
  std::vector<std::string> orientations;
  double bx = 0, by = 0;
  int nb = 0;
  for (const auto& o : objects) {
    ++f.counts[to_string(o.kind)];
    if (o.kind == ObjectKind::building) {
      f.building_colors.push_back(o.color_name);
      bx += o.box.cx;
      by += o.box.cy;
      ++nb;
    }
    if (o.kind == ObjectKind::road) orientations.push_back(road_orientation_of(o));
  }
  std::sort(f.building_colors.begin(), f.building_colors.end());
  f.building_colors.erase(std::unique(f.building_colors.begin(), f.building_colors.end()), f.building_colors.end());

  std::sort(orientations.begin(), orientations.end());
  orientations.erase(std::unique(orientations.begin(), orientations.end()), orientations.end());
  if (orientations.empty()) f.road_orientation = "none";
  else if (orientations.size() == 1) f.road_orientation = orientations.front();
  else f.road_orientation = "crossing";

  f.building_layout = nb > 0 ? region_name(bx / nb, by / nb) : "none";

  constexpr int grid = 64;
  int covered = 0;
  for (int y = 0; y < grid; ++y)
    for (int x = 0; x < grid; ++x) {
      const double sx = (x + 0.5) / grid, sy = (y + 0.5) / grid;
      if (std::any_of(objects.begin(), objects.end(), [&](const SceneObject& o) { return covered_by(o, sx, sy); }))
        ++covered;
    }
  const double open = 1.0 - static_cast<double>(covered) / (grid * grid);
  f.open_area = open > 0.8 ? "mostly open" : open > 0.65 ? "moderately built-up" : "densely built-up";

  // Relations among the three largest objects.
  std::vector<std::size_t> order(objects.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return objects[a].box.area() > objects[b].box.area(); });
  const std::size_t top = std::min<std::size_t>(3, order.size());
  for (std::size_t i = 0; i < top; ++i)
    for (std::size_t j = i + 1; j < top; ++j) {
      const auto& a = objects[order[i]];
      const auto& b = objects[order[j]];
      f.relations.push_back("the " + b.label() + " lies " + compass(b.box.cx - a.box.cx, b.box.cy - a.box.cy) +
                            " the " + a.label());
    }
  return f;
}

ToyWorld generate_toy_world(std::uint64_t seed, int num_locations, int drones_per_location) {
  if (num_locations < 1 || drones_per_location < 1) {
    throw ArgumentError("generate_toy_world: location and drone counts must be positive");
  }
  ToyWorld world;
  world.seed = seed;
  world.drones_per_location = drones_per_location;
  for (int i = 0; i < num_locations; ++i) {
    ToyScene scene = generate_scene(seed, i);
    for (std::uint64_t salt = 1; scene.objects.size() < 3; ++salt) {
      scene = generate_scene(split_seed(seed, {salt}), i);
    }
    world.locations.push_back(std::move(scene));
  }
  return world;
}

ViewTransform ViewTransform::from_jitter(std::uint64_t jitter_seed) {
  // With scale >= 1 and |offset| <= 0.03 the drone frame contains the disc of
  // radius 0.5 around the scene center, which holds every object.
  Rng rng(split_seed(jitter_seed, "drone-pose"));
  ViewTransform t;
  t.rotation = uniform(rng, -20.0, 20.0) * std::numbers::pi / 180.0;
  t.scale = uniform(rng, 1.0, 1.2);
  t.offset_x = uniform(rng, -0.03, 0.03);
  t.offset_y = uniform(rng, -0.03, 0.03);
  return t;
}

std::array<double, 2> ViewTransform::to_scene(double ix, double iy) const {
  const auto r = rotate(ix - 0.5, iy - 0.5, rotation);
  return {0.5 + scale * r[0] + offset_x, 0.5 + scale * r[1] + offset_y};
}

std::array<double, 2> ViewTransform::to_image(double sx, double sy) const {
  const auto r = rotate((sx - 0.5 - offset_x) / scale, (sy - 0.5 - offset_y) / scale, -rotation);
  return {0.5 + r[0], 0.5 + r[1]};
}

Box transform_box(const Box& b, const ViewTransform& t) {
  double x1 = 1e9, y1 = 1e9, x2 = -1e9, y2 = -1e9;
  for (double x : {b.x1(), b.x2()})
    for (double y : {b.y1(), b.y2()}) {
      const auto p = t.to_image(x, y);
      x1 = std::min(x1, p[0]);
      x2 = std::max(x2, p[0]);
      y1 = std::min(y1, p[1]);
      y2 = std::max(y2, p[1]);
    }
  return clamp_to_unit(Box::from_corners(x1, y1, x2, y2));
}

RenderedView render_views(const ToyScene& scene, ViewKind view, std::uint64_t jitter_seed, int size) {
  const ViewTransform t = view == ViewKind::drone ? ViewTransform::from_jitter(jitter_seed) : ViewTransform::identity();
  RenderedView out;
  out.image = ImageTensor(size, size);
  constexpr double kEdge = 0.012;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const auto s = t.to_scene((x + 0.5) / size, (y + 0.5) / size);
      std::array<float, 3> rgb = scene.background;
      const float n = texture_noise(scene.seed, s[0], s[1]);
      for (float& v : rgb) v += n;
      if (s[0] < 0 || s[0] > 1 || s[1] < 0 || s[1] > 1) rgb = {0.3f, 0.3f, 0.3f};
      for (const auto& o : scene.objects) {
        if (!covered_by(o, s[0], s[1])) continue;
        rgb = o.rgb;
        if (o.kind == ObjectKind::building) {
          const bool rim = s[0] - o.box.x1() < kEdge || o.box.x2() - s[0] < kEdge || s[1] - o.box.y1() < kEdge ||
                           o.box.y2() - s[1] < kEdge;
          if (rim) for (float& v : rgb) v *= 0.7f;
        } else if (o.kind == ObjectKind::tree || o.kind == ObjectKind::field) {
          for (float& v : rgb) v += n;
        }
      }
      for (int c = 0; c < 3; ++c) out.image.at(y, x, c) = std::clamp(rgb[static_cast<std::size_t>(c)], 0.0f, 1.0f);
    }
  }
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const auto& o = scene.objects[i];
    out.regions.push_back({transform_box(o.box, t), o.label(), static_cast<int>(i)});
  }
  return out;
}

std::uint64_t drone_jitter_seed(const ToyWorld& world, int location_id, int k, Split split) {
  return split_seed(world.seed, {static_cast<std::uint64_t>(location_id), static_cast<std::uint64_t>(k),
                                 split == Split::train ? 0x7a1eULL : 0x7e57ULL});
}

// ---------------------------------------------------------------------------

namespace {

json box_json(const Box& b) { return json::array({b.cx, b.cy, b.w, b.h}); }
Box box_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(), j.at(3).get<double>()}; }

ObjectKind parse_kind(const std::string& s) {
  for (ObjectKind k : {ObjectKind::building, ObjectKind::pool, ObjectKind::field, ObjectKind::tree, ObjectKind::road})
    if (to_string(k) == s) return k;
  throw StructuralError("unknown object kind in world file: " + s);
}

}  // namespace

std::string serialize_world(const ToyWorld& world) {
  std::string out;
  json header = {{"format", "xvg-toy-world"},
                 {"version", 1},
                 {"seed", world.seed},
                 {"drones_per_location", world.drones_per_location},
                 {"num_locations", world.locations.size()}};
  out += header.dump() + "\n";
  for (const auto& s : world.locations) {
    json objs = json::array();
    for (const auto& o : s.objects) {
      objs.push_back({{"kind", to_string(o.kind)},
                      {"color", o.color_name},
                      {"rgb", o.rgb},
                      {"box", box_json(o.box)},
                      {"segment", o.segment},
                      {"thickness", o.thickness}});
    }
    json facts = {{"counts", s.facts.counts},
                  {"building_colors", s.facts.building_colors},
                  {"road_orientation", s.facts.road_orientation},
                  {"building_layout", s.facts.building_layout},
                  {"open_area", s.facts.open_area},
                  {"relations", s.facts.relations}};
    json rec = {{"location_id", s.location_id},
                {"seed", s.seed},
                {"background", s.background},
                {"objects", objs},
                {"facts", facts}};
    out += rec.dump() + "\n";
  }
  return out;
}

ToyWorld parse_world(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    if (!line.empty()) lines.push_back(line);
    if (nl == std::string::npos) break;
    pos = nl + 1;
  }
  if (lines.empty()) throw StructuralError("empty world file");
  try {
    const json header = json::parse(lines.front());
    if (header.at("format") != "xvg-toy-world" || header.at("version") != 1) {
      throw StructuralError("unsupported world file header");
    }
    ToyWorld w;
    w.seed = header.at("seed").get<std::uint64_t>();
    w.drones_per_location = header.at("drones_per_location").get<int>();
    const auto n = header.at("num_locations").get<std::size_t>();
    if (lines.size() != n + 1) throw StructuralError("world file scene count does not match header");
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const json rec = json::parse(lines[i]);
      ToyScene s;
      s.location_id = rec.at("location_id").get<int>();
      s.seed = rec.at("seed").get<std::uint64_t>();
      s.background = rec.at("background").get<std::array<float, 3>>();
      for (const auto& o : rec.at("objects")) {
        SceneObject so;
        so.kind = parse_kind(o.at("kind").get<std::string>());
        so.color_name = o.at("color").get<std::string>();
        so.rgb = o.at("rgb").get<std::array<float, 3>>();
        so.box = box_from(o.at("box"));
        so.segment = o.at("segment").get<std::array<double, 4>>();
        so.thickness = o.at("thickness").get<double>();
        s.objects.push_back(so);
      }
      const json& f = rec.at("facts");
      s.facts.counts = f.at("counts").get<std::map<std::string, int>>();
      s.facts.building_colors = f.at("building_colors").get<std::vector<std::string>>();
      s.facts.road_orientation = f.at("road_orientation").get<std::string>();
      s.facts.building_layout = f.at("building_layout").get<std::string>();
      s.facts.open_area = f.at("open_area").get<std::string>();
      s.facts.relations = f.at("relations").get<std::vector<std::string>>();
      w.locations.push_back(std::move(s));
    }
    return w;
  } catch (const json::exception& e) {
    throw StructuralError(std::string("malformed world file: ") + e.what());
  }
}

}  // namespace xvg::data
