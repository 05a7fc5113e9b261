#include "tracked/world.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace tracked {

namespace {

double smootherstep(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * u * (u * (u * 6.0 - 15.0) + 10.0);
}

bool is_sloped(const TerrainSegment& s) { return s.slope_beta != 0.0 || s.cross_slope != 0.0; }

}  // namespace

Terrain::Terrain(std::vector<TerrainSegment> segments, double transition_length)
    : segments_(std::move(segments)), transition_length_(transition_length) {
  validate();
}

Terrain Terrain::flat(double start_x, double length) {
  return Terrain({TerrainSegment{start_x, length, 0.0, 0.0}});
}

void Terrain::validate() const {
  if (segments_.empty()) throw std::invalid_argument("terrain: no segments");
  if (!(transition_length_ > 0.0)) throw std::invalid_argument("terrain: transition length must be positive");
  bool seen_ramp = false;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& s = segments_[i];
    if (!(s.length > 0.0)) throw std::invalid_argument("terrain: segment length must be positive");
    if (std::abs(s.slope_beta) > kMaxSlopeDeg || std::abs(s.cross_slope) > kMaxSlopeDeg) {
      throw std::invalid_argument("terrain: slope exceeds the 30 degree climbing capability");
    }
    if (i > 0) {
      const auto& prev = segments_[i - 1];
      if (std::abs(prev.start_x + prev.length - s.start_x) > 1e-9) {
        throw std::invalid_argument("terrain: segments must be contiguous and ordered");
      }
    }
    if (is_sloped(s)) {
      if (s.length < kMinRampLength) throw std::invalid_argument("terrain: ramp segment shorter than 5 m");
      if (!seen_ramp) {
        if (i == 0 || is_sloped(segments_[i - 1]) || segments_[i - 1].length < kMinApproachLength) {
          throw std::invalid_argument("terrain: ramp needs a flat approach of at least 3 m");
        }
      }
      seen_ramp = true;
    }
  }
}

double Terrain::start_x() const { return segments_.front().start_x; }

double Terrain::end_x() const {
  const auto& last = segments_.back();
  return last.start_x + last.length;
}

const TerrainSegment& Terrain::segment_at(double x) const {
  for (const auto& s : segments_) {
    if (x < s.start_x + s.length) return s;
  }
  return segments_.back();
}

std::pair<double, double> Terrain::slope_at(double x) const {
  double beta = segments_.front().slope_beta;
  double gamma = segments_.front().cross_slope;
  for (std::size_t i = 1; i < segments_.size(); ++i) {
    const double w = smootherstep((x - segments_[i].start_x) / transition_length_ + 0.5);
    beta += (segments_[i].slope_beta - segments_[i - 1].slope_beta) * w;
    gamma += (segments_[i].cross_slope - segments_[i - 1].cross_slope) * w;
  }
  return {deg2rad(beta), deg2rad(gamma)};
}

Attitude terrain_attitude(const Pose& pose, const Terrain& terrain) {
  const auto [beta, gamma] = terrain.slope_at(pose.x);
  const double gx = std::tan(beta);
  const double gy = std::tan(gamma);
  const double c = std::cos(pose.heading);
  const double s = std::sin(pose.heading);
  // Surface rise per metre along the heading and along the vehicle's left.
  const double along = gx * c + gy * s;
  const double across = -gx * s + gy * c;
  return {std::atan(across), std::atan(along)};
}

double terrain_tilt_deg(double x, const Terrain& terrain) {
  const auto [beta, gamma] = terrain.slope_at(x);
  return rad2deg(std::atan(std::hypot(std::tan(beta), std::tan(gamma))));
}

void Obstacle::validate() const {
  if (!(half_width > 0.0) || !(depth > 0.0)) {
    throw std::invalid_argument("obstacle: half_width and depth must be positive");
  }
}

void SensorArray::validate() const {
  if (!(safety_margin_q > 0.2)) throw std::invalid_argument("sensor array: safety margin q must exceed 0.2 m");
  if (!(max_range_mm > 0.0)) throw std::invalid_argument("sensor array: max range must be positive");
  if (rays_per_group < 1) throw std::invalid_argument("sensor array: need at least one ray per group");
  if (!(fov_per_group_deg >= 0.0) || fov_per_group_deg >= 180.0) {
    throw std::invalid_argument("sensor array: field of view must be in [0, 180) degrees");
  }
}

double SensorArray::zone_width(const VehicleParams& params) const {
  return (params.body_width_D + 2.0 * safety_margin_q) / kGroupCount;
}

std::array<double, kGroupCount> SensorArray::mount_offsets(const VehicleParams& params) const {
  const double w = zone_width(params);
  const double left_edge = 0.5 * w * kGroupCount;
  std::array<double, kGroupCount> out{};
  for (int i = 0; i < kGroupCount; ++i) out[i] = left_edge - w * (i + 0.5);
  return out;
}

RangeReadings RangeReadings::clear(const SensorArray& array) {
  RangeReadings r;
  r.distance_mm.fill(array.max_range_mm);
  return r;
}

double RangeReadings::min() const {
  return *std::min_element(distance_mm.begin(), distance_mm.end());
}

std::string DetectionMask::str() const {
  std::string s(kGroupCount, '0');
  for (int i = 0; i < kGroupCount; ++i) {
    if (test(i)) s[i] = '1';
  }
  return s;
}

DetectionMask DetectionMask::parse(const std::string& pattern) {
  if (pattern.size() != kGroupCount) throw std::invalid_argument("mask pattern must have 5 characters");
  DetectionMask m;
  for (int i = 0; i < kGroupCount; ++i) {
    if (pattern[i] == '1') {
      m.bits |= static_cast<std::uint8_t>(1u << i);
    } else if (pattern[i] != '0') {
      throw std::invalid_argument("mask pattern must contain only 0 and 1");
    }
  }
  return m;
}

std::optional<double> ray_box_distance(double ox, double oy, double dx, double dy,
                                       const Obstacle& box) {
  const double lo[2] = {box.x - 0.5 * box.depth, box.y - box.half_width};
  const double hi[2] = {box.x + 0.5 * box.depth, box.y + box.half_width};
  const double o[2] = {ox, oy};
  const double d[2] = {dx, dy};
  double t_near = 0.0;
  double t_far = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 2; ++a) {
    if (std::abs(d[a]) < 1e-15) {
      if (o[a] < lo[a] || o[a] > hi[a]) return std::nullopt;
      continue;
    }
    double t0 = (lo[a] - o[a]) / d[a];
    double t1 = (hi[a] - o[a]) / d[a];
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
    if (t_near > t_far) return std::nullopt;
  }
  return t_near;
}

RangeReadings sense(const VehicleState& state, const std::vector<Obstacle>& obstacles,
                    const SensorArray& array, const VehicleParams& params) {
  RangeReadings out = RangeReadings::clear(array);
  const auto mounts = array.mount_offsets(params);
  const double c = std::cos(state.pose.heading);
  const double s = std::sin(state.pose.heading);
  const double front = 0.5 * params.chassis_length;
  const double fov = deg2rad(array.fov_per_group_deg);
  const double max_range_m = array.max_range_mm / 1000.0;

  for (int g = 0; g < kGroupCount; ++g) {
    const double ox = state.pose.x + front * c - mounts[g] * s;
    const double oy = state.pose.y + front * s + mounts[g] * c;
    double best = max_range_m;
    for (int r = 0; r < array.rays_per_group; ++r) {
      // Rays fan symmetrically from +fov/2 (left) to -fov/2 (right).
      const double rel = array.rays_per_group == 1
                             ? 0.0
                             : fov * (0.5 - static_cast<double>(r) / (array.rays_per_group - 1));
      const double dx = std::cos(state.pose.heading + rel);
      const double dy = std::sin(state.pose.heading + rel);
      for (const auto& ob : obstacles) {
        if (auto t = ray_box_distance(ox, oy, dx, dy, ob)) best = std::min(best, *t);
      }
    }
    // A reading is strictly positive even when the mount touches an obstacle.
    out.distance_mm[g] = std::clamp(best * 1000.0, 1.0, array.max_range_mm);
  }
  return out;
}

DetectionMask detection_mask(const RangeReadings& readings, double trigger_mm) {
  DetectionMask m;
  for (int i = 0; i < kGroupCount; ++i) {
    if (readings.distance_mm[i] <= trigger_mm) m.bits |= static_cast<std::uint8_t>(1u << i);
  }
  return m;
}

DetectionMask span_fill(DetectionMask mask) {
  if (!mask.any()) return mask;
  int first = 0;
  while (!mask.test(first)) ++first;
  int last = kGroupCount - 1;
  while (!mask.test(last)) --last;
  DetectionMask out;
  for (int i = first; i <= last; ++i) out.bits |= static_cast<std::uint8_t>(1u << i);
  return out;
}

ObstacleCase classify_mask(DetectionMask mask) {
  if (!mask.any()) return std::nullopt;
  const DetectionMask run = span_fill(mask);
  int first = 0;
  while (!run.test(first)) ++first;
  int len = 0;
  while (first + len < kGroupCount && run.test(first + len)) ++len;
  // Cases are numbered by run length, then left to right: 1-5, 6-9, 10-12, 13-14, 15.
  static constexpr std::array<int, kGroupCount> kFirstCaseOfLength = {1, 6, 10, 13, 15};
  return kFirstCaseOfLength[len - 1] + first;
}

ObstacleCase classify(const RangeReadings& readings, double trigger_mm) {
  if (!(trigger_mm > 0.0)) throw std::invalid_argument("classify: trigger distance must be positive");
  return classify_mask(detection_mask(readings, trigger_mm));
}

DetectionMask case_mask(int case_index) {
  if (case_index < 1 || case_index > 15) throw std::out_of_range("case index must be in 1..15");
  static constexpr std::array<int, kGroupCount> kFirstCaseOfLength = {1, 6, 10, 13, 15};
  int len = kGroupCount;
  while (kFirstCaseOfLength[len - 1] > case_index) --len;
  const int first = case_index - kFirstCaseOfLength[len - 1];
  DetectionMask m;
  for (int i = first; i < first + len; ++i) m.bits |= static_cast<std::uint8_t>(1u << i);
  return m;
}

int mirror_case(int case_index) {
  const DetectionMask m = case_mask(case_index);
  DetectionMask r;
  for (int i = 0; i < kGroupCount; ++i) {
    if (m.test(i)) r.bits |= static_cast<std::uint8_t>(1u << (kGroupCount - 1 - i));
  }
  return *classify_mask(r);
}

bool footprint_hits(const Pose& pose, const VehicleParams& params, const Obstacle& obstacle) {
  const auto corners = footprint(pose, params);
  const double lo_x = obstacle.x - 0.5 * obstacle.depth;
  const double hi_x = obstacle.x + 0.5 * obstacle.depth;
  const double lo_y = obstacle.y - obstacle.half_width;
  const double hi_y = obstacle.y + obstacle.half_width;

  // Separating axis test: world x, world y, then the vehicle's two axes.
  double min_x = corners[0].first, max_x = corners[0].first;
  double min_y = corners[0].second, max_y = corners[0].second;
  for (const auto& [cx, cy] : corners) {
    min_x = std::min(min_x, cx);
    max_x = std::max(max_x, cx);
    min_y = std::min(min_y, cy);
    max_y = std::max(max_y, cy);
  }
  if (max_x < lo_x || min_x > hi_x || max_y < lo_y || min_y > hi_y) return false;

  const std::array<std::pair<double, double>, 4> box = {
      std::pair{hi_x, hi_y}, std::pair{lo_x, hi_y}, std::pair{lo_x, lo_y}, std::pair{hi_x, lo_y}};
  const double c = std::cos(pose.heading);
  const double s = std::sin(pose.heading);
  const std::array<std::pair<double, double>, 2> axes = {std::pair{c, s}, std::pair{-s, c}};
  const std::array<double, 2> half = {0.5 * params.chassis_length, 0.5 * params.body_width_D};
  for (int a = 0; a < 2; ++a) {
    const auto [ax, ay] = axes[a];
    const double centre = pose.x * ax + pose.y * ay;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& [bx, by] : box) {
      const double p = bx * ax + by * ay;
      lo = std::min(lo, p);
      hi = std::max(hi, p);
    }
    if (hi < centre - half[a] || lo > centre + half[a]) return false;
  }
  return true;
}

}  // namespace tracked
