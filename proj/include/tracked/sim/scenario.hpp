#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tracked/expert.hpp"
#include "tracked/vehicle.hpp"
#include "tracked/world.hpp"

namespace tracked::sim {

inline constexpr int kScenarioFormatVersion = 1;

enum class ControllerKind { Expert, Learned };

/// The four terrain layouts: flat, climbing, descending and cross slope.
enum class TerrainClass { Flat, Uphill, Downhill, Cross };

const char* to_string(ControllerKind kind);
const char* to_string(TerrainClass cls);
TerrainClass terrain_class_from_string(const std::string& name);

/// Network tag when separate networks are trained: "grade" for flat, uphill
/// and downhill runs, "cross" for side slopes.
std::string routing_tag(TerrainClass cls);

struct Scenario {
  std::string name;
  Terrain terrain = Terrain::flat(-1.0, 23.0);
  TerrainClass terrain_class = TerrainClass::Flat;
  double slope_deg = 0.0;  // signed ramp slope (longitudinal or cross)
  std::vector<Obstacle> obstacles;
  SensorArray sensor;
  VehicleParams vehicle;
  ExpertConfig expert;
  Pose start;
  Target target{16.0, 0.0};
  ControllerKind controller = ControllerKind::Expert;
  std::string weights_path;
  std::uint64_t seed = 0;
  double dt = 0.01;
  double max_time = 40.0;
  int canonical_case = 0;  // 1..15 for the canonical single-obstacle set, else 0

  /// Throws std::invalid_argument with a diagnostic on any violated invariant.
  void validate() const;
};

std::string scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const std::string& text);
Scenario load_scenario(const std::string& path);
void save_scenario(const std::string& path, const Scenario& s);

/// Terrain with a flat 4.5 m approach and a ramp from x = 3.5 m.
Terrain ramp_terrain(TerrainClass cls, double slope_deg);

/// Randomised layout: one obstacle 5-8 m ahead, width 0.2-1.5 m, lateral centre
/// anywhere over the sensor span, slope drawn from {0, +-6, +-7, +-9, 15} to
/// match the terrain class.
Scenario random_scenario(std::mt19937_64& rng, const std::string& name);

/// Flat scenario whose obstacle first appears as the given case (1..15).
Scenario canonical_scenario(int case_index);

}  // namespace tracked::sim
