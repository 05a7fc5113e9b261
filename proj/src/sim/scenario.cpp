#include "tracked/sim/scenario.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace tracked::sim {

using nlohmann::json;

const char* to_string(ControllerKind kind) {
  return kind == ControllerKind::Expert ? "expert" : "learned";
}

const char* to_string(TerrainClass cls) {
  switch (cls) {
    case TerrainClass::Flat: return "flat";
    case TerrainClass::Uphill: return "uphill";
    case TerrainClass::Downhill: return "downhill";
    case TerrainClass::Cross: return "cross";
  }
  return "?";
}

TerrainClass terrain_class_from_string(const std::string& name) {
  if (name == "flat") return TerrainClass::Flat;
  if (name == "uphill") return TerrainClass::Uphill;
  if (name == "downhill") return TerrainClass::Downhill;
  if (name == "cross") return TerrainClass::Cross;
  throw std::invalid_argument("unknown terrain class '" + name + "'");
}

std::string routing_tag(TerrainClass cls) {
  return cls == TerrainClass::Cross ? "cross" : "grade";
}

void Scenario::validate() const {
  if (!(dt > 0.0 && dt <= 0.1)) throw std::invalid_argument("scenario: dt must be in (0, 0.1]");
  if (!(max_time > dt)) throw std::invalid_argument("scenario: max_time must exceed dt");
  vehicle.validate();
  expert.validate();
  sensor.validate();
  for (const auto& o : obstacles) o.validate();
  if (!terrain.contains(start.x)) throw std::invalid_argument("scenario: start lies outside the terrain");
  if (!terrain.contains(target.x)) throw std::invalid_argument("scenario: target lies outside the terrain");
  if (distance_to(start, target) <= expert.reach_radius) {
    throw std::invalid_argument("scenario: start is already within the target radius");
  }
  for (const auto& o : obstacles) {
    if (footprint_hits(start, vehicle, o)) throw std::invalid_argument("scenario: vehicle starts inside an obstacle");
  }
  if (controller == ControllerKind::Learned && weights_path.empty()) {
    throw std::invalid_argument("scenario: learned controller needs a weights file");
  }
}

namespace {

json terrain_to_json(const Terrain& t) {
  json segs = json::array();
  for (const auto& s : t.segments()) {
    segs.push_back({{"start_x", s.start_x}, {"length", s.length}, {"slope_beta", s.slope_beta},
                    {"cross_slope", s.cross_slope}});
  }
  return {{"segments", segs}, {"transition_length", t.transition_length()}};
}

Terrain terrain_from_json(const json& j) {
  std::vector<TerrainSegment> segs;
  for (const auto& s : j.at("segments")) {
    segs.push_back({s.at("start_x").get<double>(), s.at("length").get<double>(),
                    s.value("slope_beta", 0.0), s.value("cross_slope", 0.0)});
  }
  return Terrain(std::move(segs), j.value("transition_length", 1.0));
}

}  // namespace

std::string scenario_to_json(const Scenario& s) {
  json obs = json::array();
  for (const auto& o : s.obstacles) {
    obs.push_back({{"x", o.x}, {"y", o.y}, {"half_width", o.half_width}, {"depth", o.depth}});
  }
  json j = {
      {"format_version", kScenarioFormatVersion},
      {"name", s.name},
      {"terrain", terrain_to_json(s.terrain)},
      {"terrain_class", to_string(s.terrain_class)},
      {"slope_deg", s.slope_deg},
      {"obstacles", obs},
      {"sensor",
       {{"safety_margin_q", s.sensor.safety_margin_q},
        {"max_range_mm", s.sensor.max_range_mm},
        {"rays_per_group", s.sensor.rays_per_group},
        {"fov_per_group_deg", s.sensor.fov_per_group_deg}}},
      {"start", {{"x", s.start.x}, {"y", s.start.y}, {"heading", s.start.heading}}},
      {"target", {{"x", s.target.x}, {"y", s.target.y}}},
      {"controller", {{"kind", to_string(s.controller)}, {"weights", s.weights_path}}},
      {"expert",
       {{"trigger_mm", s.expert.trigger_mm},
        {"omega_s", s.expert.omega_s},
        {"k_p", s.expert.k_p},
        {"k_return", s.expert.k_return},
        {"n_clear_steps", s.expert.n_clear_steps},
        {"control_period_steps", s.expert.control_period_steps},
        {"return_tolerance_deg", s.expert.return_tolerance_deg},
        {"reach_radius", s.expert.reach_radius}}},
      {"seed", s.seed},
      {"dt", s.dt},
      {"max_time", s.max_time},
      {"canonical_case", s.canonical_case},
  };
  return j.dump(2);
}

Scenario scenario_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("scenario: malformed JSON: ") + e.what());
  }
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kScenarioFormatVersion) {
      throw std::invalid_argument("scenario: unsupported format_version " + std::to_string(version));
    }
    Scenario s;
    s.name = j.value("name", "");
    s.terrain = terrain_from_json(j.at("terrain"));
    s.terrain_class = terrain_class_from_string(j.value("terrain_class", "flat"));
    s.slope_deg = j.value("slope_deg", 0.0);
    for (const auto& o : j.value("obstacles", json::array())) {
      s.obstacles.push_back({o.at("x").get<double>(), o.at("y").get<double>(), o.at("half_width").get<double>(),
                             o.at("depth").get<double>()});
    }
    if (j.contains("sensor")) {
      const auto& a = j["sensor"];
      s.sensor.safety_margin_q = a.value("safety_margin_q", s.sensor.safety_margin_q);
      s.sensor.max_range_mm = a.value("max_range_mm", s.sensor.max_range_mm);
      s.sensor.rays_per_group = a.value("rays_per_group", s.sensor.rays_per_group);
      s.sensor.fov_per_group_deg = a.value("fov_per_group_deg", s.sensor.fov_per_group_deg);
    }
    const auto& st = j.at("start");
    s.start = {st.at("x").get<double>(), st.at("y").get<double>(), st.value("heading", 0.0)};
    s.target = {j.at("target").at("x").get<double>(), j.at("target").at("y").get<double>()};
    if (j.contains("controller")) {
      const std::string kind = j["controller"].value("kind", "expert");
      if (kind == "expert") {
        s.controller = ControllerKind::Expert;
      } else if (kind == "learned") {
        s.controller = ControllerKind::Learned;
      } else {
        throw std::invalid_argument("scenario: unknown controller kind '" + kind + "'");
      }
      s.weights_path = j["controller"].value("weights", "");
    }
    if (j.contains("expert")) {
      const auto& e = j["expert"];
      s.expert.trigger_mm = e.value("trigger_mm", s.expert.trigger_mm);
      s.expert.omega_s = e.value("omega_s", s.expert.omega_s);
      s.expert.k_p = e.value("k_p", s.expert.k_p);
      s.expert.k_return = e.value("k_return", s.expert.k_return);
      s.expert.n_clear_steps = e.value("n_clear_steps", s.expert.n_clear_steps);
      s.expert.control_period_steps = e.value("control_period_steps", s.expert.control_period_steps);
      s.expert.return_tolerance_deg = e.value("return_tolerance_deg", s.expert.return_tolerance_deg);
      s.expert.reach_radius = e.value("reach_radius", s.expert.reach_radius);
    }
    s.seed = j.value("seed", std::uint64_t{0});
    s.dt = j.value("dt", 0.01);
    s.max_time = j.value("max_time", 40.0);
    s.canonical_case = j.value("canonical_case", 0);
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("scenario: ") + e.what());
  }
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return scenario_from_json(buf.str());
}

void save_scenario(const std::string& path, const Scenario& s) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scenario file '" + path + "'");
  out << scenario_to_json(s) << '\n';
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

Terrain ramp_terrain(TerrainClass cls, double slope_deg) {
  constexpr double kStart = -1.0;
  constexpr double kApproach = 4.5;
  constexpr double kEnd = 22.0;
  switch (cls) {
    case TerrainClass::Flat: return Terrain::flat(kStart, kEnd - kStart);
    case TerrainClass::Uphill:
    case TerrainClass::Downhill:
      return Terrain({{kStart, kApproach, 0.0, 0.0}, {kStart + kApproach, kEnd - kStart - kApproach, slope_deg, 0.0}});
    case TerrainClass::Cross:
      return Terrain({{kStart, kApproach, 0.0, 0.0}, {kStart + kApproach, kEnd - kStart - kApproach, 0.0, slope_deg}});
  }
  throw std::invalid_argument("ramp_terrain: unknown class");
}

Scenario random_scenario(std::mt19937_64& rng, const std::string& name) {
  static const double kUphill[] = {6.0, 7.0, 9.0, 15.0};
  static const double kDownhill[] = {-6.0, -7.0, -9.0};
  static const double kCross[] = {6.0, -6.0, 7.0, -7.0, 9.0, -9.0, 15.0};
  std::uniform_int_distribution<int> pick_class(0, 3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Scenario s;
  s.name = name;
  s.terrain_class = static_cast<TerrainClass>(pick_class(rng));
  auto pick = [&rng](const auto& values) {
    std::uniform_int_distribution<std::size_t> d(0, std::size(values) - 1);
    return values[d(rng)];
  };
  switch (s.terrain_class) {
    case TerrainClass::Flat: s.slope_deg = 0.0; break;
    case TerrainClass::Uphill: s.slope_deg = pick(kUphill); break;
    case TerrainClass::Downhill: s.slope_deg = pick(kDownhill); break;
    case TerrainClass::Cross: s.slope_deg = pick(kCross); break;
  }
  s.terrain = ramp_terrain(s.terrain_class, s.slope_deg);

  const double span = s.sensor.zone_width(s.vehicle) * kGroupCount;
  const double face = 5.0 + 3.0 * unit(rng);
  const double width = 0.2 + 1.3 * unit(rng);
  const double centre = span * (unit(rng) - 0.5);
  const double depth = 0.2 + 0.4 * unit(rng);
  s.obstacles.push_back({face + 0.5 * depth, centre, 0.5 * width, depth});
  s.seed = rng();
  return s;
}

namespace {

// Lateral extent (y_lo, y_hi) of the canonical obstacle for each case. Each
// layout produces the named case at first detection. Where the expert can pass,
// the span sits deepest inside the region of passable spans for that case; for
// cases 11 and 13-15 no single passable span exists and the narrowest span that
// produces the case is used.
struct CanonicalLayout {
  double y_lo, y_hi;
};

constexpr CanonicalLayout kCanonical[15] = {
    {0.65, 1.30},   {0.27, 0.47},   {0.18, 0.27},  {-0.47, -0.27}, {-1.30, -0.65},
    {0.28, 1.30},   {0.18, 0.53},   {-0.53, -0.18}, {-1.30, -0.28}, {0.18, 1.30},
    {-0.18, 0.18},  {-1.30, -0.18}, {-0.18, 0.55}, {-0.55, 0.18},  {-0.55, 0.55},
};

}  // namespace

Scenario canonical_scenario(int case_index) {
  if (case_index < 1 || case_index > 15) throw std::out_of_range("canonical_scenario: case must be in 1..15");
  const CanonicalLayout& c = kCanonical[case_index - 1];
  Scenario s;
  s.name = "canonical-" + std::to_string(case_index);
  s.canonical_case = case_index;
  const double depth = 0.3;
  const double face = 6.0;
  s.obstacles.push_back({face + 0.5 * depth, 0.5 * (c.y_lo + c.y_hi), 0.5 * (c.y_hi - c.y_lo), depth});
  s.seed = static_cast<std::uint64_t>(case_index);
  return s;
}

}  // namespace tracked::sim
