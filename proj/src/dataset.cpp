#include "xvg/dataset.hpp"

#include <algorithm>
#include <set>

#include "xvg/error.hpp"
#include "xvg/seed.hpp"

namespace xvg {

bool is_valid_region_box(const Box& b, double tol) {
  return b.w > 0 && b.h > 0 && b.x1() >= -tol && b.x2() <= 1 + tol && b.y1() >= -tol && b.y2() <= 1 + tol;
}

Box clamp_to_unit(const Box& b) {
  const double x1 = std::clamp(b.x1(), 0.0, 1.0);
  const double x2 = std::clamp(b.x2(), 0.0, 1.0);
  const double y1 = std::clamp(b.y1(), 0.0, 1.0);
  const double y2 = std::clamp(b.y2(), 0.0, 1.0);
  return Box::from_corners(x1, y1, x2, y2);
}

}  // namespace xvg

namespace xvg::data {

namespace fs = std::filesystem;

std::string to_string(ViewKind v) { return v == ViewKind::drone ? "drone" : "satellite"; }
std::string to_string(Split s) { return s == Split::train ? "train" : "test"; }

ViewKind parse_view(const std::string& s) {
  if (s == "drone") return ViewKind::drone;
  if (s == "satellite") return ViewKind::satellite;
  throw ArgumentError("unknown view kind: " + s);
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  throw ArgumentError("unknown split: " + s);
}

std::vector<const DatasetEntry*> DatasetIndex::entries_of(int location_id, ViewKind view) const {
  std::vector<const DatasetEntry*> out;
  for (const auto& e : entries)
    if (e.location_id == location_id && e.view == view) out.push_back(&e);
  return out;
}

DatasetIndex scan_dataset(const fs::path& root, Split split) {
  if (!fs::is_directory(root)) throw StructuralError("dataset root does not exist: " + root.string());
  const fs::path split_dir = root / to_string(split);

  // Location names come from the union of both view directories; a location
  // missing from either view is reported as empty.
  std::set<std::string> names;
  for (ViewKind view : {ViewKind::satellite, ViewKind::drone}) {
    const fs::path dir = split_dir / to_string(view);
    if (!fs::is_directory(dir)) throw StructuralError("missing view directory: " + dir.string());
    for (const auto& loc : fs::directory_iterator(dir))
      if (loc.is_directory()) names.insert(loc.path().filename().string());
  }
  if (names.empty()) throw StructuralError("no locations under " + split_dir.string());

  DatasetIndex index;
  index.root = root;
  index.split = split;
  index.location_names.assign(names.begin(), names.end());

  std::vector<std::string> empty;
  for (int id = 0; id < index.num_locations(); ++id) {
    const std::string& name = index.location_names[static_cast<std::size_t>(id)];
    for (ViewKind view : {ViewKind::satellite, ViewKind::drone}) {
      const fs::path dir = split_dir / to_string(view) / name;
      std::vector<std::string> files;
      if (fs::is_directory(dir)) {
        for (const auto& f : fs::directory_iterator(dir))
          if (f.is_regular_file() && is_image_file(f.path())) files.push_back(f.path().filename().string());
      }
      if (files.empty()) {
        empty.push_back(name + " (" + to_string(view) + ")");
        continue;
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) {
        index.entries.push_back({id, view, to_string(split) + "/" + to_string(view) + "/" + name + "/" + f});
      }
    }
  }
  if (!empty.empty()) {
    std::string msg = "empty location(s):";
    for (const auto& e : empty) msg += " " + e;
    throw StructuralError(msg);
  }
  return index;
}

std::map<int, std::string> sample_region_representative(const DatasetIndex& index, std::uint64_t seed) {
  std::map<int, std::string> out;
  for (int id = 0; id < index.num_locations(); ++id) {
    const auto drones = index.entries_of(id, ViewKind::drone);
    if (drones.empty()) {
      throw ArgumentError("location " + std::to_string(id) + " has no drone views to sample from");
    }
    Rng rng(split_seed(seed, {static_cast<std::uint64_t>(id)}));
    out[id] = drones[uniform_index(rng, drones.size())]->image_ref;
  }
  return out;
}

}  // namespace xvg::data
