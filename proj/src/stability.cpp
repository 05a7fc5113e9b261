#include "tracked/stability.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace tracked {

DseWeights::DseWeights() : lambdas_{0.2, 0.2, 0.1, 0.1, 0.2, 0.2} {}

DseWeights::DseWeights(const std::array<double, 6>& lambdas) : lambdas_(lambdas) {
  for (double l : lambdas_) {
    if (!(l >= 0.0)) throw std::invalid_argument("DSE weights must be non-negative");
  }
  const double sum = std::accumulate(lambdas_.begin(), lambdas_.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("DSE weights must sum to 1");
}

const char* to_string(Axis axis) {
  switch (axis) {
    case Axis::AX: return "a_x";
    case Axis::AY: return "a_y";
    case Axis::AZ: return "a_z";
    case Axis::ARX: return "a_rx";
    case Axis::ARY: return "a_ry";
    case Axis::ARZ: return "a_rz";
    case Axis::Beta: return "beta";
  }
  return "?";
}

double dse(const ImuSample& s, const DseWeights& weights, double beta_max_deg) {
  if (!(beta_max_deg > 0.0)) throw std::invalid_argument("dse: beta_max must be positive");
  const auto& l = weights.values();
  const double weighted = l[0] * std::abs(s.a_x) + l[1] * std::abs(s.a_y) + l[2] * std::abs(s.a_z) +
                          l[3] * std::abs(s.a_rx) + l[4] * std::abs(s.a_ry) + l[5] * std::abs(s.a_rz);
  return std::abs(s.beta) / beta_max_deg * weighted;
}

std::vector<Axis> check_thresholds(const ImuSample& s, const StabilityLimits& lim) {
  std::vector<Axis> out;
  auto check = [&out](double value, double bound, Axis axis) {
    if (std::abs(value) > bound) out.push_back(axis);
  };
  check(s.a_x, lim.a_x, Axis::AX);
  check(s.a_y, lim.a_y, Axis::AY);
  check(s.a_z, lim.a_z, Axis::AZ);
  check(s.a_rx, lim.a_rx, Axis::ARX);
  check(s.a_ry, lim.a_ry, Axis::ARY);
  check(s.a_rz, lim.a_rz, Axis::ARZ);
  check(s.beta, lim.beta, Axis::Beta);
  return out;
}

namespace {

std::vector<double> differentiate(const std::vector<double>& f, double dt) {
  const std::size_t n = f.size();
  std::vector<double> d(n);
  d.front() = (f[1] - f[0]) / dt;
  d.back() = (f[n - 1] - f[n - 2]) / dt;
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - f[i - 1]) / (2.0 * dt);
  return d;
}

}  // namespace

std::vector<ImuSample> imu_from_trajectory(std::span<const VehicleState> states, double dt) {
  if (states.size() < 3) throw std::invalid_argument("imu_from_trajectory: need at least 3 states");
  if (!(dt > 0.0)) throw std::invalid_argument("imu_from_trajectory: dt must be positive");
  const std::size_t n = states.size();

  std::vector<double> vx(n), vy(n), vz(n), pitch(n), roll(n), yaw(n);
  double unwrap = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = states[i];
    vx[i] = s.v_forward * std::cos(s.pose.heading);
    vy[i] = s.v_forward * std::sin(s.pose.heading);
    vz[i] = s.v_forward * std::tan(s.pitch);
    pitch[i] = s.pitch;
    roll[i] = s.roll;
    if (i > 0) unwrap += normalize_angle(s.pose.heading - states[i - 1].pose.heading);
    yaw[i] = states[0].pose.heading + unwrap;
  }

  const auto ax = differentiate(vx, dt);
  const auto ay = differentiate(vy, dt);
  const auto az = differentiate(vz, dt);
  const auto pitch_acc = differentiate(differentiate(pitch, dt), dt);
  const auto roll_acc = differentiate(differentiate(roll, dt), dt);
  const auto yaw_acc = differentiate(differentiate(yaw, dt), dt);

  std::vector<ImuSample> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double c = std::cos(states[i].pose.heading);
    const double s = std::sin(states[i].pose.heading);
    ImuSample& m = out[i];
    m.a_y = (ax[i] * c + ay[i] * s) / kGravity;
    m.a_x = (-ax[i] * s + ay[i] * c) / kGravity;
    m.a_z = az[i] / kGravity;
    m.a_rx = pitch_acc[i];
    m.a_ry = roll_acc[i];
    m.a_rz = yaw_acc[i];
    m.beta = rad2deg(states[i].pitch);
    m.time = states[i].time;
  }
  return out;
}

DseReport episode_stability(std::span<const ImuSample> samples, const DseWeights& weights,
                            const StabilityLimits& limits, double beta_max_deg) {
  if (samples.empty()) throw std::invalid_argument("episode_stability: no samples");
  DseReport report;
  report.dse_value = 0.0;
  for (const auto& s : samples) {
    report.dse_value = std::max(report.dse_value, dse(s, weights, beta_max_deg));
    for (Axis a : check_thresholds(s, limits)) {
      if (std::find(report.per_axis_violations.begin(), report.per_axis_violations.end(), a) ==
          report.per_axis_violations.end()) {
        report.per_axis_violations.push_back(a);
      }
    }
  }
  std::sort(report.per_axis_violations.begin(), report.per_axis_violations.end());
  report.stable = report.dse_value < limits.dse_critical && report.per_axis_violations.empty();
  return report;
}

}  // namespace tracked
