#pragma once

#include <array>

#include "tracked/vehicle.hpp"
#include "tracked/world.hpp"

namespace tracked {

/// One row of the avoidance strategy table. theta_m is negative for a right
/// turn and positive for a left turn.
struct AvoidanceCommand {
  double theta_m = 0.0;  // degrees
  double omega_L = 0.0;  // rad/s
  double omega_R = 0.0;  // rad/s
  double omega_O = 0.0;  // rad/s, (omega_L + omega_R) / 2

  TrackCommand tracks() const { return {omega_L, omega_R}; }
  bool operator==(const AvoidanceCommand&) const = default;
};

/// The 15 strategy rows, indexed by case - 1.
const std::array<AvoidanceCommand, 15>& avoidance_table();

/// Table row for a case index in 1..15; throws std::out_of_range otherwise.
AvoidanceCommand lookup_command(int case_index);

/// Mean of |omega_R - omega_L| / (omega_L + omega_R) over the table. Used to
/// turn a (heading, mean speed) pair back into track speeds.
double table_differential_ratio();

enum class Phase { Cruise, Avoid, Return };

const char* to_string(Phase phase);

struct ControllerState {
  Phase phase = Phase::Cruise;
  double initial_heading = 0.0;  // rad, course held before the first avoidance
  int clear_counter = 0;         // simulation steps with every reading above L_T

  // Active avoidance manoeuvre.
  int active_case = 0;
  AvoidanceCommand active{};
  double maneuver_start_heading = 0.0;  // rad
  bool turn_complete = false;
  int maneuver_count = 0;  // manoeuvres started so far
};

struct ExpertConfig {
  double trigger_mm = kDefaultTriggerMm;  // L_T
  double omega_s = 5.5;                   // straight-running drive wheel speed, rad/s
  double k_p = 2.0;                       // cruise heading hold, (rad/s) per rad
  double k_return = 5.0;                  // return-to-course gain, (rad/s) per rad
  int n_clear_steps = 10;                 // debounce before returning to course
  int control_period_steps = 10;          // simulation steps per controller tick
  double return_tolerance_deg = 3.0;      // Return -> Cruise once within this
  double reach_radius = 1.0;              // m, target reached

  void validate() const;
};

struct Target {
  double x = 0.0;
  double y = 0.0;
};

struct ExpertOutput {
  TrackCommand command;
  ControllerState next;
};

/// One controller tick of the cruise / avoid / return state machine.
ExpertOutput expert_step(const ControllerState& ctrl, const VehicleState& state,
                         const RangeReadings& readings, const Target& target,
                         const ExpertConfig& cfg, const VehicleParams& params);

/// Supervised targets for the learned policy.
struct TrainingLabel {
  double theta = 0.0;    // degrees
  double omega_O = 0.0;  // rad/s
};

/// Labels the command the expert just produced. `ctrl` is the state returned
/// alongside that command:
///   Cruise -> (0, mean track speed)
///   Avoid  -> (theta_m of the active row, mean track speed)
///   Return -> (heading change still needed to regain the initial course, mean track speed)
TrainingLabel label_sample(const ControllerState& ctrl, const VehicleState& state,
                           const TrackCommand& command);

/// Heading hold toward `desired` at mean speed `omega`, with a proportional
/// differential clamped so neither track reverses or exceeds v_max.
TrackCommand heading_hold(double heading, double desired, double omega, double gain,
                          double max_ratio, const VehicleParams& params);

double bearing_to(const Pose& pose, const Target& target);
double distance_to(const Pose& pose, const Target& target);

}  // namespace tracked
