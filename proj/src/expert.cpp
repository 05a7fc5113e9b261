#include "tracked/expert.hpp"

#include <algorithm>
#include <stdexcept>

namespace tracked {

const std::array<AvoidanceCommand, 15>& avoidance_table() {
  static const std::array<AvoidanceCommand, 15> kTable = {{
      {-6.0, 1.5, 0.5, 1.0},      // 1  A
      {-20.0, 4.5, 1.6, 3.05},    // 2  B
      {-28.0, 6.8, 2.4, 4.6},     // 3  C
      {+20.0, 1.6, 4.5, 3.05},    // 4  D
      {+6.0, 0.5, 1.5, 1.0},      // 5  E
      {-20.0, 4.5, 1.6, 3.05},    // 6  AB
      {-28.0, 6.8, 2.4, 4.6},     // 7  BC
      {+28.0, 2.4, 6.8, 4.6},     // 8  CD
      {+20.0, 1.6, 4.5, 3.05},    // 9  DE
      {-28.0, 6.8, 2.4, 4.6},     // 10 ABC
      {-45.0, 10.8, 3.9, 7.35},   // 11 BCD
      {+28.0, 2.4, 6.8, 4.6},     // 12 CDE
      {-42.0, 10.0, 3.6, 6.8},    // 13 ABCD
      {+42.0, 3.6, 10.0, 6.8},    // 14 BCDE
      {-65.0, 15.6, 5.6, 10.6},   // 15 ABCDE
  }};
  return kTable;
}

AvoidanceCommand lookup_command(int case_index) {
  if (case_index < 1 || case_index > 15) {
    throw std::out_of_range("lookup_command: case index must be in 1..15");
  }
  return avoidance_table()[case_index - 1];
}

double table_differential_ratio() {
  double sum = 0.0;
  for (const auto& row : avoidance_table()) {
    sum += std::abs(row.omega_R - row.omega_L) / (row.omega_L + row.omega_R);
  }
  return sum / static_cast<double>(avoidance_table().size());
}

const char* to_string(Phase phase) {
  switch (phase) {
    case Phase::Cruise: return "cruise";
    case Phase::Avoid: return "avoid";
    case Phase::Return: return "return";
  }
  return "?";
}

void ExpertConfig::validate() const {
  if (!(trigger_mm > 0.0)) throw std::invalid_argument("expert: L_T must be positive");
  if (!(omega_s > 0.0)) throw std::invalid_argument("expert: omega_s must be positive");
  if (n_clear_steps < 1 || control_period_steps < 1) {
    throw std::invalid_argument("expert: step counts must be positive");
  }
  if (!(reach_radius > 0.0)) throw std::invalid_argument("expert: reach radius must be positive");
}

double bearing_to(const Pose& pose, const Target& target) {
  return std::atan2(target.y - pose.y, target.x - pose.x);
}

double distance_to(const Pose& pose, const Target& target) {
  return std::hypot(target.x - pose.x, target.y - pose.y);
}

TrackCommand heading_hold(double heading, double desired, double omega, double gain,
                          double max_ratio, const VehicleParams& params) {
  const double err = normalize_angle(desired - heading);
  const double omega_cap = params.v_max / params.wheel_radius;
  double delta = std::clamp(gain * err, -max_ratio * omega, max_ratio * omega);
  // Keep both tracks inside [0, v_max].
  const double headroom = std::max(0.0, std::min(omega, omega_cap - omega));
  delta = std::clamp(delta, -headroom, headroom);
  return {omega - delta, omega + delta};
}

namespace {

ControllerState begin_maneuver(ControllerState ctrl, int case_index, const VehicleState& state) {
  ctrl.phase = Phase::Avoid;
  ctrl.active_case = case_index;
  ctrl.active = lookup_command(case_index);
  ctrl.maneuver_start_heading = state.pose.heading;
  ctrl.turn_complete = false;
  ctrl.clear_counter = 0;
  ++ctrl.maneuver_count;
  return ctrl;
}

}  // namespace

ExpertOutput expert_step(const ControllerState& ctrl, const VehicleState& state,
                         const RangeReadings& readings, const Target& target,
                         const ExpertConfig& cfg, const VehicleParams& params) {
  ControllerState next = ctrl;
  if (distance_to(state.pose, target) <= cfg.reach_radius) {
    next.phase = Phase::Cruise;
    return {{0.0, 0.0}, next};
  }

  const ObstacleCase detected = classify(readings, cfg.trigger_mm);
  const double heading = state.pose.heading;
  // Beyond the table's own ratios, steering never asks for a sharper turn.
  const double max_ratio = table_differential_ratio();

  auto cruise = [&](ControllerState c) -> ExpertOutput {
    c.phase = Phase::Cruise;
    return {heading_hold(heading, bearing_to(state.pose, target), cfg.omega_s, cfg.k_p, max_ratio, params), c};
  };
  auto go_return = [&](ControllerState c) -> ExpertOutput {
    c.phase = Phase::Return;
    const double err = normalize_angle(c.initial_heading - heading);
    if (std::abs(rad2deg(err)) < cfg.return_tolerance_deg) return cruise(c);
    return {heading_hold(heading, c.initial_heading, cfg.omega_s, cfg.k_return, max_ratio, params), c};
  };

  switch (ctrl.phase) {
    case Phase::Cruise: {
      if (!detected) return cruise(next);
      next.initial_heading = heading;
      next = begin_maneuver(next, *detected, state);
      return {next.active.tracks(), next};
    }

    case Phase::Avoid: {
      next.clear_counter = detected ? 0 : next.clear_counter + cfg.control_period_steps;
      if (!next.turn_complete) {
        const double turned = rad2deg(normalize_angle(heading - next.maneuver_start_heading));
        const double wanted = next.active.theta_m;
        if ((wanted < 0.0 && turned <= wanted) || (wanted > 0.0 && turned >= wanted)) {
          next.turn_complete = true;
        } else {
          return {next.active.tracks(), next};
        }
      }
      if (detected) {
        // Still blocked after the turn: apply the strategy again from here.
        next = begin_maneuver(next, *detected, state);
        return {next.active.tracks(), next};
      }
      if (next.clear_counter >= cfg.n_clear_steps) return go_return(next);
      const double hold = next.maneuver_start_heading + deg2rad(next.active.theta_m);
      return {heading_hold(heading, hold, cfg.omega_s, cfg.k_p, max_ratio, params), next};
    }

    case Phase::Return: {
      if (detected) {
        next = begin_maneuver(next, *detected, state);
        return {next.active.tracks(), next};
      }
      return go_return(next);
    }
  }
  return cruise(next);
}

TrainingLabel label_sample(const ControllerState& ctrl, const VehicleState& state,
                           const TrackCommand& command) {
  switch (ctrl.phase) {
    case Phase::Cruise: return {0.0, command.mean()};
    case Phase::Avoid: return {ctrl.active.theta_m, command.mean()};
    case Phase::Return:
      return {rad2deg(normalize_angle(ctrl.initial_heading - state.pose.heading)), command.mean()};
  }
  return {0.0, command.mean()};
}

}  // namespace tracked
