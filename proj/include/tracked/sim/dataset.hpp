#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tracked/nn/train.hpp"
#include "tracked/sim/episode.hpp"

namespace tracked::sim {

inline constexpr int kDatasetFormatVersion = 1;
inline constexpr const char* kRecordsFile = "dataset.jsonl";
inline constexpr const char* kManifestFile = "manifest.json";

struct DatasetManifest {
  int format_version = kDatasetFormatVersion;
  std::uint64_t seed = 0;
  int scenario_count = 0;
  long record_count = 0;  // controller ticks written
  long sample_count = 0;  // ticks in the avoid or return phase (usable for training)
  std::map<std::string, int> slope_distribution;  // slope in degrees -> episodes
  std::map<std::string, int> class_distribution;  // terrain class -> episodes
  std::map<int, int> case_coverage;               // case -> manoeuvres started
  std::map<std::string, int> outcomes;            // outcome -> episodes

  std::string to_json() const;
  static DatasetManifest from_json(const std::string& text);
};

/// Scenario i of a generated dataset: the 15 canonical layouts first, then
/// randomised layouts drawn from one generator seeded with `seed`.
std::vector<Scenario> dataset_scenarios(int n_scenarios, std::uint64_t seed);

/// Runs the expert on every scenario and writes one JSON record per controller
/// tick plus the manifest into `out_dir` (created if missing).
DatasetManifest generate_dataset(int n_scenarios, std::uint64_t seed, const std::string& out_dir);

/// Training view of a dataset directory.
struct LoadedDataset {
  DatasetManifest manifest;
  nn::SampleSet samples;               // avoid/return ticks with their windows
  std::vector<TerrainClass> classes;   // parallel to samples
};

LoadedDataset load_dataset(const std::string& dir, int window_len = 10);

/// Subset whose terrain class maps to the given routing tag.
nn::SampleSet select_tag(const LoadedDataset& data, const std::string& tag);

}  // namespace tracked::sim
