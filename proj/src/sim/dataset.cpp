#include "tracked/sim/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace tracked::sim {

using nlohmann::json;

namespace {

std::string slope_key(double slope) {
  std::ostringstream s;
  s << slope;
  return s.str();
}

}  // namespace

std::string DatasetManifest::to_json() const {
  json cases = json::object();
  for (const auto& [k, v] : case_coverage) cases[std::to_string(k)] = v;
  const json j = {
      {"format_version", format_version},
      {"seed", seed},
      {"scenario_count", scenario_count},
      {"record_count", record_count},
      {"sample_count", sample_count},
      {"slope_distribution", slope_distribution},
      {"class_distribution", class_distribution},
      {"case_coverage", cases},
      {"outcomes", outcomes},
      {"records_file", kRecordsFile},
  };
  return j.dump(2);
}

DatasetManifest DatasetManifest::from_json(const std::string& text) {
  const json j = json::parse(text);
  DatasetManifest m;
  m.format_version = j.at("format_version").get<int>();
  if (m.format_version != kDatasetFormatVersion) {
    throw std::runtime_error("dataset: unsupported format_version " + std::to_string(m.format_version));
  }
  m.seed = j.at("seed").get<std::uint64_t>();
  m.scenario_count = j.at("scenario_count").get<int>();
  m.record_count = j.at("record_count").get<long>();
  m.sample_count = j.at("sample_count").get<long>();
  m.slope_distribution = j.at("slope_distribution").get<std::map<std::string, int>>();
  m.class_distribution = j.at("class_distribution").get<std::map<std::string, int>>();
  for (const auto& [k, v] : j.at("case_coverage").items()) m.case_coverage[std::stoi(k)] = v.get<int>();
  m.outcomes = j.at("outcomes").get<std::map<std::string, int>>();
  return m;
}

std::vector<Scenario> dataset_scenarios(int n_scenarios, std::uint64_t seed) {
  if (n_scenarios < 1) throw std::invalid_argument("dataset: need at least one scenario");
  std::vector<Scenario> out;
  std::mt19937_64 rng(seed);
  for (int i = 0; i < n_scenarios; ++i) {
    if (i < 15) {
      out.push_back(canonical_scenario(i + 1));
    } else {
      out.push_back(random_scenario(rng, "random-" + std::to_string(i)));
    }
  }
  return out;
}

DatasetManifest generate_dataset(int n_scenarios, std::uint64_t seed, const std::string& out_dir) {
  const auto scenarios = dataset_scenarios(n_scenarios, seed);
  std::filesystem::create_directories(out_dir);
  const auto records_path = std::filesystem::path(out_dir) / kRecordsFile;
  std::ofstream out(records_path);
  if (!out) throw std::runtime_error("dataset: cannot write '" + records_path.string() + "'");

  DatasetManifest m;
  m.seed = seed;
  m.scenario_count = n_scenarios;
  for (int e = 0; e < n_scenarios; ++e) {
    const Scenario& sc = scenarios[static_cast<std::size_t>(e)];
    const Episode ep = run_episode(sc);
    ++m.slope_distribution[slope_key(sc.slope_deg)];
    ++m.class_distribution[to_string(sc.terrain_class)];
    ++m.outcomes[to_string(ep.outcome)];

    int tick = 0;
    int maneuvers_case = 0;
    for (const auto& s : ep.samples) {
      if (!s.controller_tick) continue;
      const bool valid = s.phase != Phase::Cruise;
      if (s.phase == Phase::Avoid && s.active_case != 0 && s.active_case != maneuvers_case) {
        ++m.case_coverage[s.active_case];
      }
      maneuvers_case = s.phase == Phase::Avoid ? s.active_case : 0;
      const json rec = {
          {"format_version", kDatasetFormatVersion},
          {"episode", e},
          {"tick", tick++},
          {"time", s.time},
          {"phase", to_string(s.phase)},
          {"case", s.active_case},
          {"terrain_class", to_string(sc.terrain_class)},
          {"slope_deg", sc.slope_deg},
          {"features", s.features},
          {"labels", {s.label.theta, s.label.omega_O}},
      };
      out << rec.dump() << '\n';
      ++m.record_count;
      if (valid) ++m.sample_count;
    }
  }
  out.close();
  if (!out) throw std::runtime_error("dataset: write failed for '" + records_path.string() + "'");

  const auto manifest_path = std::filesystem::path(out_dir) / kManifestFile;
  std::ofstream mf(manifest_path);
  if (!mf) throw std::runtime_error("dataset: cannot write '" + manifest_path.string() + "'");
  mf << m.to_json() << '\n';
  if (!mf) throw std::runtime_error("dataset: write failed for '" + manifest_path.string() + "'");
  return m;
}

LoadedDataset load_dataset(const std::string& dir, int window_len) {
  const auto manifest_path = std::filesystem::path(dir) / kManifestFile;
  std::ifstream mf(manifest_path);
  if (!mf) throw std::runtime_error("dataset: cannot open '" + manifest_path.string() + "'");
  std::stringstream buf;
  buf << mf.rdbuf();

  LoadedDataset data;
  data.manifest = DatasetManifest::from_json(buf.str());

  const auto records_path = std::filesystem::path(dir) / kRecordsFile;
  std::ifstream in(records_path);
  if (!in) throw std::runtime_error("dataset: cannot open '" + records_path.string() + "'");

  FeatureWindow window(window_len);
  int current_episode = -1;
  long records = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json r;
    try {
      r = json::parse(line);
    } catch (const json::parse_error& e) {
      throw std::runtime_error("dataset: malformed record " + std::to_string(records + 1) + ": " + e.what());
    }
    ++records;
    if (r.at("format_version").get<int>() != kDatasetFormatVersion) {
      throw std::runtime_error("dataset: record with unsupported format_version");
    }
    const int episode = r.at("episode").get<int>();
    if (episode != current_episode) {
      window = FeatureWindow(window_len);
      current_episode = episode;
    }
    const auto features = r.at("features").get<std::vector<double>>();
    const auto labels = r.at("labels").get<std::vector<double>>();
    if (features.size() != static_cast<std::size_t>(nn::kInputDim) || labels.size() != 2) {
      throw std::runtime_error("dataset: record must carry 12 features and 2 labels");
    }
    Features f{};
    std::copy(features.begin(), features.end(), f.begin());
    window.push(f);
    if (r.at("phase").get<std::string>() == "cruise") continue;

    data.samples.windows.push_back(window.matrix());
    data.samples.targets.emplace_back(labels[0], labels[1]);
    data.samples.episode_ids.push_back(episode);
    data.samples.slope_deg.push_back(r.at("slope_deg").get<double>());
    data.classes.push_back(terrain_class_from_string(r.at("terrain_class").get<std::string>()));
  }
  if (records != data.manifest.record_count ||
      static_cast<long>(data.samples.size()) != data.manifest.sample_count) {
    throw std::runtime_error("dataset: record counts do not match the manifest");
  }
  return data;
}

nn::SampleSet select_tag(const LoadedDataset& data, const std::string& tag) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < data.classes.size(); ++i) {
    if (tag == "all" || routing_tag(data.classes[i]) == tag) idx.push_back(i);
  }
  return data.samples.subset(idx);
}

}  // namespace tracked::sim
