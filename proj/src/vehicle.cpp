#include "tracked/vehicle.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace tracked {

double normalize_angle(double rad) {
  double a = std::remainder(rad, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

void VehicleParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument(std::string("vehicle parameter must be positive: ") + name);
    }
  };
  positive(mass, "mass");
  positive(gauge_b, "gauge_b");
  positive(body_width_D, "body_width_D");
  positive(chassis_length, "chassis_length");
  positive(track_ground_length, "track_ground_length");
  positive(track_height, "track_height");
  positive(v_max, "v_max");
  positive(beta_max_capability, "beta_max_capability");
  positive(wheel_radius, "wheel_radius");
  positive(track_accel_limit, "track_accel_limit");
}

TrackSpeeds track_speeds_to_velocities(const TrackCommand& cmd, const VehicleParams& params) {
  return {cmd.omega_L * params.wheel_radius, cmd.omega_R * params.wheel_radius};
}

TrackCommand velocities_to_track_speeds(const TrackSpeeds& speeds, const VehicleParams& params) {
  return {speeds.v_l / params.wheel_radius, speeds.v_r / params.wheel_radius};
}

double yaw_rate(double v_l, double v_r, const VehicleParams& params) {
  return (-v_l + v_r) / params.steering_base();
}

Pose pose_rate(const Pose& pose, double v_l, double v_r, const VehicleParams& params) {
  const double v = 0.5 * (v_l + v_r);
  return {v * std::cos(pose.heading), v * std::sin(pose.heading), yaw_rate(v_l, v_r, params)};
}

VehicleState step_kinematics(const VehicleState& state, double v_l, double v_r, double dt,
                             const VehicleParams& params) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_kinematics: dt must be positive");

  const Pose& p0 = state.pose;
  auto offset = [](const Pose& p, const Pose& k, double h) {
    return Pose{p.x + h * k.x, p.y + h * k.y, p.heading + h * k.heading};
  };
  const Pose k1 = pose_rate(p0, v_l, v_r, params);
  const Pose k2 = pose_rate(offset(p0, k1, 0.5 * dt), v_l, v_r, params);
  const Pose k3 = pose_rate(offset(p0, k2, 0.5 * dt), v_l, v_r, params);
  const Pose k4 = pose_rate(offset(p0, k3, dt), v_l, v_r, params);

  VehicleState next = state;
  next.pose.x = p0.x + dt / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
  next.pose.y = p0.y + dt / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y);
  next.pose.heading = normalize_angle(
      p0.heading + dt / 6.0 * (k1.heading + 2.0 * k2.heading + 2.0 * k3.heading + k4.heading));
  next.v_forward = 0.5 * (v_l + v_r);
  next.tracks = {v_l, v_r};
  next.time = state.time + dt;
  return next;
}

double turning_radius(double v_l, double v_r, const VehicleParams& params) {
  const double dv = v_l - v_r;
  if (std::abs(dv) < kStraightEpsilon) return kInfiniteRadius;
  const double magnitude = std::abs((2.0 * v_r + dv) * params.steering_base() / (2.0 * dv));
  // dv > 0 means the left track is faster: clockwise, right-hand turn.
  return dv > 0.0 ? -magnitude : magnitude;
}

double heading_from_geometry(double q_mm, double r_i_mm) {
  if (!(q_mm > 200.0)) {
    throw std::invalid_argument("heading_from_geometry: safety distance q must exceed 200 mm");
  }
  return rad2deg(std::atan((q_mm + r_i_mm) / 1500.0));
}

TrackSpeeds slew_tracks(const TrackSpeeds& current, const TrackSpeeds& target, double dt,
                        const VehicleParams& params) {
  const double max_delta = params.track_accel_limit * dt;
  auto approach = [max_delta](double from, double to) {
    return from + std::clamp(to - from, -max_delta, max_delta);
  };
  return {approach(current.v_l, target.v_l), approach(current.v_r, target.v_r)};
}

std::array<std::pair<double, double>, 4> footprint(const Pose& pose, const VehicleParams& params) {
  const double hl = 0.5 * params.chassis_length;
  const double hw = 0.5 * params.body_width_D;
  const double c = std::cos(pose.heading);
  const double s = std::sin(pose.heading);
  auto world = [&](double fx, double fy) {
    return std::pair{pose.x + fx * c - fy * s, pose.y + fx * s + fy * c};
  };
  return {world(hl, hw), world(-hl, hw), world(-hl, -hw), world(hl, -hw)};
}

}  // namespace tracked
