#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "xvg/box.hpp"
#include "xvg/image.hpp"

namespace xvg::data {

enum class ViewKind { drone, satellite };
enum class Split { train, test };

std::string to_string(ViewKind v);
std::string to_string(Split s);
ViewKind parse_view(const std::string& s);
Split parse_split(const std::string& s);

struct DatasetEntry {
  int location_id = 0;
  ViewKind view = ViewKind::drone;
  /// Path relative to the dataset root, with forward slashes.
  std::string image_ref;

  friend bool operator==(const DatasetEntry&, const DatasetEntry&) = default;
};

/// Index of one split of a `<split>/<view>/<location>/<image>` tree.
/// Location directories are sorted by name and numbered 0..C-1.
struct DatasetIndex {
  std::filesystem::path root;
  Split split = Split::train;
  std::vector<DatasetEntry> entries;
  std::vector<std::string> location_names;

  int num_locations() const { return static_cast<int>(location_names.size()); }
  std::vector<const DatasetEntry*> entries_of(int location_id, ViewKind view) const;

  friend bool operator==(const DatasetIndex&, const DatasetIndex&) = default;
};

/// Throws StructuralError on a missing view directory or an empty location.
DatasetIndex scan_dataset(const std::filesystem::path& root, Split split);

/// One drone image per location, chosen uniformly with a seed-derived draw.
std::map<int, std::string> sample_region_representative(const DatasetIndex& index, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Procedural toy world

enum class ObjectKind { building, pool, field, tree, road };
std::string to_string(ObjectKind k);

struct SceneObject {
  ObjectKind kind = ObjectKind::building;
  std::string color_name;
  std::array<float, 3> rgb{};
  /// Bounding box in scene coordinates; for roads, the box of the thick segment.
  Box box;
  /// Road centerline endpoints and width (unused for rectangles).
  std::array<double, 4> segment{};
  double thickness = 0.0;

  std::string label() const;
  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

/// Templating material for captions, derived once from the objects.
struct SceneFacts {
  std::map<std::string, int> counts;  // keyed by object kind name
  std::vector<std::string> building_colors;
  std::string road_orientation;  // north-south | east-west | diagonal | crossing | none
  std::string building_layout;   // compass region where buildings concentrate
  std::string open_area;         // mostly open | moderately built-up | densely built-up
  std::vector<std::string> relations;

  friend bool operator==(const SceneFacts&, const SceneFacts&) = default;
};

struct ToyScene {
  int location_id = 0;
  std::uint64_t seed = 0;
  std::array<float, 3> background{};
  std::vector<SceneObject> objects;
  SceneFacts facts;

  friend bool operator==(const ToyScene&, const ToyScene&) = default;
};

struct ToyWorld {
  std::uint64_t seed = 0;
  int drones_per_location = 1;
  std::vector<ToyScene> locations;

  friend bool operator==(const ToyWorld&, const ToyWorld&) = default;
};

ToyWorld generate_toy_world(std::uint64_t seed, int num_locations, int drones_per_location);

/// Derived facts for a set of objects (exposed for tests).
SceneFacts derive_facts(const std::vector<SceneObject>& objects);

/// Drone pose relative to the canonical (satellite) frame.
struct ViewTransform {
  double rotation = 0.0;  // radians
  double scale = 1.0;     // >1 widens the field of view
  double offset_x = 0.0;
  double offset_y = 0.0;

  static ViewTransform identity() { return {}; }
  static ViewTransform from_jitter(std::uint64_t jitter_seed);
  /// Scene point → image point.
  std::array<double, 2> to_image(double sx, double sy) const;
  /// Image point → scene point.
  std::array<double, 2> to_scene(double ix, double iy) const;
};

Box transform_box(const Box& scene_box, const ViewTransform& t);

struct RenderedView {
  ImageTensor image;
  std::vector<GroundTruthRegion> regions;  // one per object, in object order
};

/// Satellite views ignore `jitter_seed` and use the identity transform.
RenderedView render_views(const ToyScene& scene, ViewKind view, std::uint64_t jitter_seed, int size = 64);

/// Jitter seed used for drone image `k` of a location in a split.
std::uint64_t drone_jitter_seed(const ToyWorld& world, int location_id, int k, Split split);

// Serialization: JSON Lines. Line 1 is a header
// {"format":"xvg-toy-world","version":1,"seed":..,"drones_per_location":..,"num_locations":..};
// each following line is one scene record with its seed, objects (kind,
// color, rgb, box, segment, thickness) and facts.
std::string serialize_world(const ToyWorld& world);
ToyWorld parse_world(const std::string& text);

}  // namespace xvg::data
