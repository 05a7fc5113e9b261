#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tracked/vehicle.hpp"

namespace tracked {

// ---------------------------------------------------------------------------
// Terrain

struct TerrainSegment {
  double start_x = 0.0;      // m
  double length = 0.0;       // m
  double slope_beta = 0.0;   // degrees, rise along +x
  double cross_slope = 0.0;  // degrees, rise along +y
};

/// Piecewise-planar terrain along the world x axis. Slopes are blended across
/// segment boundaries with a quintic smoothstep over `transition_length`, so
/// attitude is C2 along any path.
class Terrain {
 public:
  static constexpr double kMaxSlopeDeg = 30.0;
  static constexpr double kMinApproachLength = 3.0;
  static constexpr double kMinRampLength = 5.0;

  Terrain() = default;
  explicit Terrain(std::vector<TerrainSegment> segments, double transition_length = 1.0);

  /// Single flat segment covering [start_x, start_x + length).
  static Terrain flat(double start_x, double length);

  const std::vector<TerrainSegment>& segments() const { return segments_; }
  double transition_length() const { return transition_length_; }
  double start_x() const;
  double end_x() const;
  bool contains(double x) const { return x >= start_x() && x <= end_x(); }

  /// Smoothed (longitudinal, cross) slope angles in radians at x.
  std::pair<double, double> slope_at(double x) const;

  /// Nominal (unsmoothed) segment slope at x in degrees.
  const TerrainSegment& segment_at(double x) const;

 private:
  void validate() const;

  std::vector<TerrainSegment> segments_;
  double transition_length_ = 1.0;
};

struct Attitude {
  double roll = 0.0;   // rad
  double pitch = 0.0;  // rad
};

/// Geometric attitude of a vehicle resting on the local terrain plane.
Attitude terrain_attitude(const Pose& pose, const Terrain& terrain);

/// Tilt of the local terrain plane from horizontal, degrees.
double terrain_tilt_deg(double x, const Terrain& terrain);

// ---------------------------------------------------------------------------
// Obstacles and ultrasonic sensing

/// Axis-aligned box in plan view: spans x in [x - depth/2, x + depth/2] and
/// y in [y - half_width, y + half_width].
struct Obstacle {
  double x = 0.0;
  double y = 0.0;
  double half_width = 0.0;
  double depth = 0.0;

  void validate() const;
};

inline constexpr int kGroupCount = 5;

struct SensorArray {
  double safety_margin_q = 0.3;  // m, added on each side of the body width
  double max_range_mm = 4000.0;
  int rays_per_group = 5;
  double fov_per_group_deg = 15.0;

  void validate() const;

  /// Lateral mount offsets (m, left positive) of groups A..E in the vehicle
  /// frame, left to right.
  std::array<double, kGroupCount> mount_offsets(const VehicleParams& params) const;

  /// Width of one group's lateral zone.
  double zone_width(const VehicleParams& params) const;
};

struct RangeReadings {
  std::array<double, kGroupCount> distance_mm{};

  static RangeReadings clear(const SensorArray& array);
  double min() const;
};

/// Bit i is set when group i (A = 0) sees something within the trigger distance.
struct DetectionMask {
  std::uint8_t bits = 0;

  bool test(int group) const { return (bits >> group) & 1u; }
  bool any() const { return bits != 0; }
  /// "10000" style, group A first.
  std::string str() const;
  static DetectionMask parse(const std::string& pattern);
};

/// Obstacle classes 1..15; empty when nothing is within the trigger distance.
using ObstacleCase = std::optional<int>;

inline constexpr double kDefaultTriggerMm = 1500.0;

/// Plan-view raycast from each group's mount point. A group's reading is the
/// minimum hit distance over its rays, clamped to the sensor range.
RangeReadings sense(const VehicleState& state, const std::vector<Obstacle>& obstacles,
                    const SensorArray& array, const VehicleParams& params);

/// Distance along the unit ray (dx, dy) from (ox, oy) to the box, if hit.
std::optional<double> ray_box_distance(double ox, double oy, double dx, double dy,
                                       const Obstacle& box);

DetectionMask detection_mask(const RangeReadings& readings, double trigger_mm);

/// Fills interior gaps so the set bits form one contiguous run.
DetectionMask span_fill(DetectionMask mask);

ObstacleCase classify_mask(DetectionMask mask);
ObstacleCase classify(const RangeReadings& readings, double trigger_mm = kDefaultTriggerMm);

/// Contiguous detection pattern belonging to a case index.
DetectionMask case_mask(int case_index);

/// Case seen after reflecting the world about the heading axis.
int mirror_case(int case_index);

/// True when the plan-view footprint intersects the obstacle.
bool footprint_hits(const Pose& pose, const VehicleParams& params, const Obstacle& obstacle);

}  // namespace tracked
