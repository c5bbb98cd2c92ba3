#include "xvg/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "xvg/error.hpp"
#include "xvg/seed.hpp"

namespace xvg::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw StructuralError("cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw StructuralError("cannot write " + p.string());
  out << text;
}

std::string location_dir(int id) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", id);
  return buf;
}

std::string image_name(const char* stem, int k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%02d.ppm", stem, k);
  return buf;
}

json regions_json(const std::vector<GroundTruthRegion>& regions) {
  json arr = json::array();
  for (const auto& r : regions) {
    arr.push_back({{"label", r.label_text}, {"object_id", r.object_id}, {"box", {r.box.cx, r.box.cy, r.box.w, r.box.h}}});
  }
  return arr;
}

}  // namespace

std::string fingerprint_text(const PrepareOptions& o) {
  return "xvg-toy-dataset v1 seed=" + std::to_string(o.seed) + " locations=" + std::to_string(o.locations) +
         " drones=" + std::to_string(o.drones_per_location) + " test_drones=" +
         std::to_string(o.test_drones_per_location) + " image_size=" + std::to_string(o.image_size) + "\n";
}

PrepareOutcome prepare_toy_dataset(const fs::path& root, const PrepareOptions& o) {
  const std::string fingerprint = fingerprint_text(o);
  if (fs::exists(root)) {
    const fs::path fp = root / "FINGERPRINT";
    if (fs::exists(fp) && read_text(fp) == fingerprint) return PrepareOutcome::unchanged;
    if (!fs::is_empty(root)) {
      if (!o.force) {
        throw StructuralError("refusing to overwrite " + root.string() +
                              ": contents do not match the requested dataset (use --force)");
      }
      fs::remove_all(root);
    }
  }
  if (o.image_size < 8) throw ArgumentError("prepare: image size must be at least 8");
  const data::ToyWorld world = data::generate_toy_world(o.seed, o.locations, o.drones_per_location);

  std::string regions;
  auto emit = [&](const fs::path& rel, const data::RenderedView& v) {
    fs::create_directories((root / rel).parent_path());
    write_ppm(root / rel, v.image);
    regions += json({{"image_ref", rel.generic_string()}, {"regions", regions_json(v.regions)}}).dump() + "\n";
  };
  for (data::Split split : {data::Split::train, data::Split::test}) {
    const int drones = split == data::Split::train ? o.drones_per_location : o.test_drones_per_location;
    const fs::path base = data::to_string(split);
    for (int id = 0; id < o.locations; ++id) {
      const auto& scene = world.locations[static_cast<std::size_t>(id)];
      emit(base / "satellite" / location_dir(id) / "sat.ppm",
           data::render_views(scene, data::ViewKind::satellite, 0, o.image_size));
      for (int k = 0; k < drones; ++k) {
        emit(base / "drone" / location_dir(id) / image_name("drone", k),
             data::render_views(scene, data::ViewKind::drone, data::drone_jitter_seed(world, id, k, split),
                                o.image_size));
      }
    }
  }
  write_text(root / "world.jsonl", data::serialize_world(world));
  write_text(root / "regions.jsonl", regions);
  // Written last: an interrupted prepare never looks complete.
  write_text(root / "FINGERPRINT", fingerprint);
  return PrepareOutcome::created;
}

RegionTable load_regions(const fs::path& root) {
  RegionTable table;
  const fs::path p = root / "regions.jsonl";
  if (!fs::exists(p)) return table;
  std::istringstream in(read_text(p));
  std::string line;
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      auto& regions = table[j.at("image_ref").get<std::string>()];
      for (const auto& r : j.at("regions")) {
        const auto b = r.at("box").get<std::array<double, 4>>();
        regions.push_back({{b[0], b[1], b[2], b[3]}, r.at("label").get<std::string>(), r.at("object_id").get<int>()});
      }
    }
  } catch (const json::exception& e) {
    throw StructuralError("malformed " + p.string() + ": " + e.what());
  }
  return table;
}

std::optional<data::ToyWorld> load_world(const fs::path& root) {
  const fs::path p = root / "world.jsonl";
  if (!fs::exists(p)) return std::nullopt;
  return data::parse_world(read_text(p));
}

SplitData load_split(const fs::path& root, data::Split split, int image_size) {
  SplitData d;
  d.index = data::scan_dataset(root, split);
  const RegionTable regions = load_regions(root);
  for (const auto& e : d.index.entries) {
    d.images.push_back(resize_bilinear(read_image(root / e.image_ref), image_size, image_size));
    const auto it = regions.find(e.image_ref);
    d.regions.push_back(it == regions.end() ? std::vector<GroundTruthRegion>{} : it->second);
  }
  return d;
}

SplitData render_split(const data::ToyWorld& world, data::Split split, int drones_per_location, int image_size) {
  SplitData d;
  d.index.split = split;
  const std::string base = data::to_string(split);
  for (int id = 0; id < static_cast<int>(world.locations.size()); ++id) {
    const auto& scene = world.locations[static_cast<std::size_t>(id)];
    d.index.location_names.push_back(location_dir(id));
    auto add = [&](data::ViewKind view, const std::string& rel, const data::RenderedView& v) {
      d.index.entries.push_back({id, view, rel});
      d.images.push_back(v.image);
      d.regions.push_back(v.regions);
    };
    add(data::ViewKind::satellite, base + "/satellite/" + location_dir(id) + "/sat.ppm",
        data::render_views(scene, data::ViewKind::satellite, 0, image_size));
    for (int k = 0; k < drones_per_location; ++k) {
      add(data::ViewKind::drone, base + "/drone/" + location_dir(id) + "/" + image_name("drone", k),
          data::render_views(scene, data::ViewKind::drone, data::drone_jitter_seed(world, id, k, split), image_size));
    }
  }
  return d;
}

std::vector<caption::CaptionRecord> generate_split_captions(const SplitData& d, const data::ToyWorld* world,
                                                           const CaptionOptions& o) {
  const bool mock = o.client == "mock";
  if (mock && !world) throw ArgumentError("the mock caption client needs a toy world (world.jsonl)");
  const caption::CotConfig cot{o.cot_steps, o.max_retries};
  caption::validate_config(cot);
  const std::string split = data::to_string(d.index.split);
  const auto suite = weather::condition_suite(o.intensity);
  const auto reps = data::sample_region_representative(d.index, split_seed(o.seed, "representative-" + split));

  std::map<std::string, std::size_t> by_ref;
  for (std::size_t i = 0; i < d.index.entries.size(); ++i) by_ref[d.index.entries[i].image_ref] = i;

  auto client_for = [&](const weather::WeatherSpec& spec, int id) -> std::unique_ptr<caption::LvlmClient> {
    if (!mock) return caption::HttpLvlmClient::from_environment(o.client == "http" ? std::string{} : o.client);
    const auto& scene = world->locations.at(static_cast<std::size_t>(id));
    return std::make_unique<caption::TemplateClient>(caption::CaptionFacts{scene.facts, spec});
  };

  std::vector<caption::CaptionRecord> out;
  for (int id = 0; id < d.index.num_locations(); ++id) {
    const std::size_t rep = by_ref.at(reps.at(id));
    const caption::CaptionSubject subject{id, d.index.entries[rep].image_ref, d.regions[rep]};
    for (std::size_t c = 0; c < suite.size(); ++c) {
      const auto spec = weather::reseeded(suite[c].spec, split_seed(o.seed, {static_cast<std::uint64_t>(id), c}));
      const ImageTensor img = weather::apply_weather(d.images[rep], spec);
      auto client = client_for(spec, id);
      auto rec = caption::generate_caption_record(img, subject, *client, cot);
      rec.split = split;
      rec.view = "drone";
      rec.condition = suite[c].name;
      out.push_back(std::move(rec));
    }
    const auto sats = d.index.entries_of(id, data::ViewKind::satellite);
    const std::size_t sat = by_ref.at(sats.front()->image_ref);
    auto client = client_for({}, id);
    auto rec = caption::generate_caption_record(d.images[sat], {id, d.index.entries[sat].image_ref, d.regions[sat]},
                                                *client, cot);
    rec.split = split;
    rec.view = "satellite";
    rec.condition = "Normal";
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace xvg::pipeline
