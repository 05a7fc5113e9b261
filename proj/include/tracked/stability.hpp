#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "tracked/vehicle.hpp"

namespace tracked {

/// Motion sample in the units the stability index mixes: linear accelerations
/// in g, angular accelerations in rad/s^2, slope in degrees.
struct ImuSample {
  double a_x = 0.0;   // lateral, g
  double a_y = 0.0;   // forward, g
  double a_z = 0.0;   // vertical, g
  double a_rx = 0.0;  // pitch angular acceleration
  double a_ry = 0.0;  // roll angular acceleration
  double a_rz = 0.0;  // heading angular acceleration
  double beta = 0.0;  // degrees
  double time = 0.0;  // s
};

class DseWeights {
 public:
  /// Default weights: 0.2 on lateral, forward, roll and heading terms; 0.1 on
  /// vertical and pitch.
  DseWeights();
  /// Throws std::invalid_argument unless all weights are >= 0 and sum to 1.
  explicit DseWeights(const std::array<double, 6>& lambdas);

  const std::array<double, 6>& values() const { return lambdas_; }

 private:
  std::array<double, 6> lambdas_;
};

enum class Axis { AX, AY, AZ, ARX, ARY, ARZ, Beta };

const char* to_string(Axis axis);

/// Upper bounds per axis; a sample violates an axis when |value| > bound.
struct StabilityLimits {
  double a_x = 1.0;    // g
  double a_y = 0.8;    // g
  double a_z = 2.0;    // g
  double a_rx = 9.0;   // rad/s^2
  double a_ry = 13.0;  // rad/s^2
  double a_rz = 16.0;  // rad/s^2
  double beta = 20.0;  // degrees
  double dse_critical = 7.26;
};

struct DseReport {
  double dse_value = 0.0;
  std::vector<Axis> per_axis_violations;
  bool stable = true;
};

inline constexpr double kDseBetaMax = 20.0;

/// Slope-scaled weighted sum of absolute accelerations.
double dse(const ImuSample& sample, const DseWeights& weights = DseWeights{},
           double beta_max_deg = kDseBetaMax);

std::vector<Axis> check_thresholds(const ImuSample& sample, const StabilityLimits& limits = {});

/// Synthesises IMU samples from a uniformly sampled trajectory. Rates and
/// accelerations use central differences, one-sided at the ends.
/// Throws std::invalid_argument for fewer than 3 states or dt <= 0.
std::vector<ImuSample> imu_from_trajectory(std::span<const VehicleState> states, double dt);

/// Maximum index over the episode plus every axis that was ever violated.
DseReport episode_stability(std::span<const ImuSample> samples, const DseWeights& weights = DseWeights{},
                            const StabilityLimits& limits = {}, double beta_max_deg = kDseBetaMax);

}  // namespace tracked
