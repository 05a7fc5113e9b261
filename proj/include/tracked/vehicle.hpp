#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

namespace tracked {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kGravity = 9.80665;

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Wraps an angle into (-pi, pi].
double normalize_angle(double rad);

/// Chassis geometry and drive limits. Defaults are the test chassis values.
struct VehicleParams {
  double mass = 450.0;                 // kg
  double gauge_b = 1.0;                // m
  double body_width_D = 1.25;          // m
  double chassis_length = 1.2;         // m, L_l
  double track_ground_length = 0.881;  // m
  double track_height = 0.331;         // m
  double v_max = 2.8;                  // m/s
  double beta_max_capability = 30.0;   // degrees
  // Chosen so the straight-running drive speed 5.5 rad/s gives 0.9 m/s.
  double wheel_radius = 0.9 / 5.5;  // m
  // Track speed slew limit of the drive, m/s^2. Not part of the chassis table.
  double track_accel_limit = 2.0;

  /// Effective steering base D + 2b used by the kinematic model.
  double steering_base() const { return body_width_D + 2.0 * gauge_b; }

  /// Throws std::invalid_argument when any invariant is violated.
  void validate() const;
};

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // rad, (-pi, pi], counter-clockwise positive
};

/// Drive-wheel angular speeds of the left and right tracks.
struct TrackCommand {
  double omega_L = 0.0;  // rad/s
  double omega_R = 0.0;  // rad/s

  double mean() const { return 0.5 * (omega_L + omega_R); }
};

struct TrackSpeeds {
  double v_l = 0.0;  // m/s
  double v_r = 0.0;  // m/s
};

struct VehicleState {
  Pose pose;
  double v_forward = 0.0;  // m/s
  double roll = 0.0;       // rad, positive when the left side is higher
  double pitch = 0.0;      // rad, positive nose-up
  double time = 0.0;       // s
  TrackSpeeds tracks;      // realised track speeds after the drive slew limit
};

/// Sentinel for an unbounded turning radius (straight-line motion).
inline constexpr double kInfiniteRadius = std::numeric_limits<double>::infinity();
inline constexpr double kStraightEpsilon = 1e-9;  // m/s

TrackSpeeds track_speeds_to_velocities(const TrackCommand& cmd, const VehicleParams& params);
TrackCommand velocities_to_track_speeds(const TrackSpeeds& speeds, const VehicleParams& params);

/// Time derivative of the pose for the given track speeds.
Pose pose_rate(const Pose& pose, double v_l, double v_r, const VehicleParams& params);

/// Heading rate (rad/s); positive (left turn) iff v_r > v_l.
double yaw_rate(double v_l, double v_r, const VehicleParams& params);

/// Advances the pose by one RK4 step with the track speeds held constant.
/// Attitude and realised track speeds are copied from `state` except for
/// `tracks` and `v_forward`, which take the supplied values.
VehicleState step_kinematics(const VehicleState& state, double v_l, double v_r, double dt,
                             const VehicleParams& params);

/// Signed turning radius of the centre point. Positive for left-hand turns,
/// negative for right-hand turns, kInfiniteRadius when |v_l - v_r| < kStraightEpsilon.
double turning_radius(double v_l, double v_r, const VehicleParams& params);

/// Candidate steering angle (degrees) needed to clear a lateral offset of
/// q + R_i within the 1500 mm look-ahead. Throws when q <= 200 mm.
double heading_from_geometry(double q_mm, double r_i_mm);

/// Moves realised track speeds toward the commanded ones, limited to
/// `params.track_accel_limit * dt` per track.
TrackSpeeds slew_tracks(const TrackSpeeds& current, const TrackSpeeds& target, double dt,
                        const VehicleParams& params);

/// Corners of the D x L_l footprint in world coordinates, counter-clockwise
/// starting from the front-left.
std::array<std::pair<double, double>, 4> footprint(const Pose& pose, const VehicleParams& params);

}  // namespace tracked
