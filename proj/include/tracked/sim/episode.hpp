#pragma once

#include <array>
#include <deque>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tracked/expert.hpp"
#include "tracked/nn/model.hpp"
#include "tracked/sim/scenario.hpp"
#include "tracked/stability.hpp"

namespace tracked::sim {

/// Network inputs, in this order:
///   0-4  group readings A..E divided by the sensor range
///   5    roll (rad)            6  pitch (rad)
///   7    heading error to the target (rad)
///   8    forward speed (m/s)
///   9    realised left track speed (rad/s)   10  realised right track speed (rad/s)
///   11   terrain tilt (degrees)
using Features = std::array<double, nn::kInputDim>;

Features extract_features(const VehicleState& state, const RangeReadings& readings, const Target& target,
                          const Terrain& terrain, const SensorArray& sensor, const VehicleParams& params);

/// Sliding window of the most recent controller-tick features, oldest first.
/// Before it fills, the first entry is repeated.
class FeatureWindow {
 public:
  explicit FeatureWindow(int length);
  void push(const Features& f);
  nn::Matrix matrix() const;
  int length() const { return length_; }

 private:
  int length_;
  std::deque<Features> buf_;
};

/// Track speeds for a commanded heading change and mean speed, using the
/// strategy table's average differential ratio.
TrackCommand tracks_for(double theta_deg, double omega_O);

struct LearnedConfig {
  double return_timeout = 6.0;  // s in Return before falling back to Cruise
};

/// Same phase logic as the expert; the table lookup is replaced by the network's
/// (heading change, mean speed) prediction while avoiding and returning. The
/// turn target is the running mean of the predicted heading change; the mean
/// speed is taken from the first prediction of each phase.
class LearnedController {
 public:
  LearnedController(const nn::ModelBundle& bundle, const ExpertConfig& cfg, const VehicleParams& params,
                    LearnedConfig lcfg = {});

  struct Tick {
    TrackCommand command;
    std::optional<nn::Prediction> prediction;
  };

  /// `window` must already contain the current tick's features.
  Tick step(const VehicleState& state, const RangeReadings& readings, const nn::Matrix& window,
            const Target& target, const std::string& network_tag);

  const ControllerState& state() const { return ctrl_; }

 private:
  void begin(const VehicleState& state, const nn::Prediction& p);

  const nn::ModelBundle& bundle_;
  ExpertConfig cfg_;
  VehicleParams params_;
  LearnedConfig lcfg_;
  ControllerState ctrl_;
  double theta_sum_ = 0.0;
  int theta_count_ = 0;
  double omega_ = 0.0;         // mean speed latched when a manoeuvre starts
  double return_omega_ = 0.0;  // mean speed latched on entering Return
  double return_elapsed_ = 0.0;
};

enum class Outcome { ReachedTarget, Collision, Unstable, Timeout };
const char* to_string(Outcome o);

struct EpisodeSample {
  double time = 0.0;
  VehicleState state;  // after the step
  RangeReadings readings;
  TrackCommand command;
  TrainingLabel label;
  Phase phase = Phase::Cruise;
  int active_case = 0;
  bool controller_tick = false;
  Features features{};  // valid on controller ticks
  ImuSample imu;
};

struct Episode {
  std::string scenario_name;
  TerrainClass terrain_class = TerrainClass::Flat;
  double slope_deg = 0.0;
  double wheel_radius = VehicleParams{}.wheel_radius;
  VehicleState initial;
  std::vector<EpisodeSample> samples;
  Outcome outcome = Outcome::Timeout;
  DseReport stability;
  int collision_step = -1;
  std::vector<int> cases_seen;  // distinct cases that started a manoeuvre, in order
  int first_case = 0;
};

/// Fixed-step loop: sense and decide every control period, slew the tracks,
/// integrate the kinematics, update attitude, record. Stops at the target, on
/// contact with an obstacle, or at max_time. `learned` is required when the
/// scenario asks for the learned controller.
Episode run_episode(const Scenario& scenario, const nn::ModelBundle* learned = nullptr);

/// True when the episode reached the target with no collision and a stable verdict.
bool success(const Episode& e);

void export_trajectory(std::ostream& out, const Episode& e);
void export_trajectory(const std::string& path, const Episode& e);

/// One parsed row of an exported trajectory.
struct TrajectoryRow {
  double time, x, y, heading, roll, pitch, v, omega_L, omega_R;
  std::array<double, kGroupCount> readings;
  ImuSample imu;
  double dse;
};

std::vector<TrajectoryRow> read_trajectory(std::istream& in);
std::vector<TrajectoryRow> read_trajectory(const std::string& path);

/// Rebuilds IMU samples from the pose, attitude and speed columns and
/// evaluates stability over the whole run.
DseReport replay_stability(const std::vector<TrajectoryRow>& rows);

}  // namespace tracked::sim
