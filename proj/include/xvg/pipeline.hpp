#pragma once

// On-disk plumbing shared by the CLI, the trainer and the evaluator: the toy
// dataset tree, its region table, split loading and caption generation.
//
// Toy tree written by prepare_toy_dataset:
//   <root>/train/{drone,satellite}/<location>/<image>.ppm
//   <root>/test/{drone,satellite}/<location>/<image>.ppm
//   <root>/world.jsonl     toy world (see data::serialize_world)
//   <root>/regions.jsonl   {"image_ref": .., "regions": [{"label", "object_id", "box"}]} per image
//   <root>/FINGERPRINT     generator parameters; a match makes prepare a no-op

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xvg/caption.hpp"
#include "xvg/dataset.hpp"
#include "xvg/weather.hpp"

namespace xvg::pipeline {

struct PrepareOptions {
  std::uint64_t seed = 7;
  int locations = 16;
  int drones_per_location = 4;
  int test_drones_per_location = 2;
  int image_size = 64;
  bool force = false;
};

std::string fingerprint_text(const PrepareOptions& o);

enum class PrepareOutcome { created, unchanged };

/// Writes the toy tree. A matching FINGERPRINT makes this a no-op; any other
/// non-empty directory is refused with StructuralError unless `force`.
PrepareOutcome prepare_toy_dataset(const std::filesystem::path& root, const PrepareOptions& o);

using RegionTable = std::map<std::string, std::vector<GroundTruthRegion>>;

/// Empty when the tree carries no regions.jsonl (e.g. a real dataset).
RegionTable load_regions(const std::filesystem::path& root);
std::optional<data::ToyWorld> load_world(const std::filesystem::path& root);

/// One split held in memory, images resized to `image_size`.
struct SplitData {
  data::DatasetIndex index;
  std::vector<ImageTensor> images;                      // parallel to index.entries
  std::vector<std::vector<GroundTruthRegion>> regions;  // empty where unknown
};

SplitData load_split(const std::filesystem::path& root, data::Split split, int image_size);

/// Same content as load_split, rendered straight from a toy world.
SplitData render_split(const data::ToyWorld& world, data::Split split, int drones_per_location, int image_size);

struct CaptionOptions {
  int cot_steps = 6;
  int max_retries = 3;
  double intensity = 0.5;
  std::uint64_t seed = 7;
  /// "mock" or an http(s) chat-completions endpoint.
  std::string client = "mock";
};

/// Captions for one split: for every location, the representative drone
/// image under each of the ten suite conditions, plus the clean satellite
/// view (view "satellite", condition "Normal"). The mock client needs the
/// toy world for its scene facts.
std::vector<caption::CaptionRecord> generate_split_captions(const SplitData& data, const data::ToyWorld* world,
                                                           const CaptionOptions& o);

/// Text used for a satellite row under eval.satellite_text = neutral_constant.
inline const std::string kNeutralSatelliteText = "satellite view, clear weather, visibility high.";

}  // namespace xvg::pipeline
