#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "tracked/vehicle.hpp"

using namespace tracked;

namespace {

VehicleState run(VehicleState s, double v_l, double v_r, double dt, int steps, const VehicleParams& p) {
  for (int i = 0; i < steps; ++i) s = step_kinematics(s, v_l, v_r, dt, p);
  return s;
}

}  // namespace

TEST_CASE("default parameters match the chassis table") {
  VehicleParams p;
  CHECK(p.mass == 450.0);
  CHECK(p.gauge_b == 1.0);
  CHECK(p.body_width_D == 1.25);
  CHECK(p.chassis_length == 1.2);
  CHECK(p.track_ground_length == 0.881);
  CHECK(p.track_height == 0.331);
  CHECK(p.v_max == 2.8);
  CHECK(p.beta_max_capability == 30.0);
  CHECK(p.steering_base() == doctest::Approx(3.25));
  CHECK_NOTHROW(p.validate());

  p.body_width_D = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = VehicleParams{};
  p.wheel_radius = -1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("track angular speeds convert to linear speeds") {
  const VehicleParams p;
  const auto straight = track_speeds_to_velocities({5.5, 5.5}, p);
  CHECK(straight.v_l == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(straight.v_r == doctest::Approx(0.9).epsilon(1e-12));

  const auto zero = track_speeds_to_velocities({0.0, 0.0}, p);
  CHECK(zero.v_l == 0.0);
  CHECK(zero.v_r == 0.0);

  const auto c3 = track_speeds_to_velocities({6.8, 2.4}, p);
  CHECK(c3.v_l == doctest::Approx(1.1127).epsilon(1e-4));
  CHECK(c3.v_r == doctest::Approx(0.3927).epsilon(1e-4));

  const auto back = velocities_to_track_speeds(c3, p);
  CHECK(back.omega_L == doctest::Approx(6.8));
  CHECK(back.omega_R == doctest::Approx(2.4));
}

TEST_CASE("straight line and pivot turn") {
  const VehicleParams p;
  VehicleState s;
  s = run(s, 0.9, 0.9, 0.01, 100, p);
  CHECK(s.pose.x == doctest::Approx(0.9).epsilon(1e-9));
  CHECK(s.pose.y == doctest::Approx(0.0));
  CHECK(s.pose.heading == doctest::Approx(0.0));
  CHECK(s.time == doctest::Approx(1.0));
  CHECK(s.v_forward == doctest::Approx(0.9));

  VehicleState pivot;
  pivot = run(pivot, -0.5, 0.5, 0.01, 50, p);
  CHECK(pivot.pose.x == doctest::Approx(0.0));
  CHECK(pivot.pose.y == doctest::Approx(0.0));
  CHECK(pivot.pose.heading == doctest::Approx(2.0 * 0.5 / 3.25 * 0.5).epsilon(1e-9));
}

TEST_CASE("yaw rate sign and magnitude") {
  const VehicleParams p;
  CHECK(yaw_rate(1.1127, 0.3927, p) == doctest::Approx(-0.22154).epsilon(1e-4));
  CHECK(yaw_rate(0.3, 0.6, p) > 0.0);
  CHECK(yaw_rate(0.6, 0.3, p) < 0.0);
  CHECK(yaw_rate(0.6, 0.6, p) == 0.0);
}

TEST_CASE("step_kinematics rejects non-positive dt") {
  const VehicleParams p;
  CHECK_THROWS_AS(step_kinematics(VehicleState{}, 1.0, 1.0, 0.0, p), std::invalid_argument);
  CHECK_THROWS_AS(step_kinematics(VehicleState{}, 1.0, 1.0, -0.01, p), std::invalid_argument);
}

TEST_CASE("heading stays normalised") {
  const VehicleParams p;
  VehicleState s;
  for (int i = 0; i < 5000; ++i) {
    s = step_kinematics(s, 0.0, 1.0, 0.01, p);
    REQUIRE(s.pose.heading > -kPi);
    REQUIRE(s.pose.heading <= kPi);
  }
  CHECK(normalize_angle(3.0 * kPi) == doctest::Approx(kPi));
  CHECK(normalize_angle(-kPi) == doctest::Approx(kPi));
  CHECK(normalize_angle(0.25) == 0.25);
}

TEST_CASE("turning radius") {
  const VehicleParams p;
  CHECK(std::isinf(turning_radius(0.9, 0.9, p)));
  CHECK(turning_radius(1.1127, 0.3927, p) == doctest::Approx(-3.398).epsilon(1e-3));
  CHECK(turning_radius(0.3927, 1.1127, p) == doctest::Approx(3.398).epsilon(1e-3));
  CHECK(std::abs(turning_radius(2.0, 0.0, p)) == doctest::Approx(1.625));
  CHECK(std::abs(turning_radius(1.0 + 1e-12, 1.0, p)) == kInfiniteRadius);
}

TEST_CASE("circle closure over one revolution at dt = 0.001") {
  const VehicleParams p;
  const std::pair<double, double> cases[] = {{1.1127, 0.3927}, {0.3927, 1.1127}, {0.5, 0.8}, {1.6, 0.1}};
  for (const auto& [v_l, v_r] : cases) {
    CAPTURE(v_l);
    CAPTURE(v_r);
    // Independent radius: centre speed over turn rate.
    const double omega = (v_r - v_l) / (p.body_width_D + 2.0 * p.gauge_b);
    const double r_expected = 0.5 * (v_l + v_r) / std::abs(omega);
    const double dt = 0.001;
    const int steps = static_cast<int>(std::ceil(2.0 * kPi / std::abs(omega) / dt));

    const double cy = omega > 0 ? r_expected : -r_expected;
    VehicleState s;
    double max_dev = 0.0;
    for (int i = 0; i < steps; ++i) {
      s = step_kinematics(s, v_l, v_r, dt, p);
      const double d = std::hypot(s.pose.x, s.pose.y - cy);
      max_dev = std::max(max_dev, std::abs(d - r_expected));
    }
    CHECK(max_dev / r_expected < 0.01);
    CHECK(std::abs(turning_radius(v_l, v_r, p)) == doctest::Approx(r_expected).epsilon(1e-12));
    // Back near the start after one revolution.
    CHECK(std::hypot(s.pose.x, s.pose.y) < 0.01 * r_expected);
  }
}

TEST_CASE("heading from geometry") {
  CHECK(heading_from_geometry(300.0, 1200.0) == doctest::Approx(45.0));
  CHECK(heading_from_geometry(300.0, 568.0) == doctest::Approx(30.05).epsilon(1e-3));
  CHECK(heading_from_geometry(201.0, -200.9999) == doctest::Approx(0.0).epsilon(1e-3));
  CHECK_THROWS_AS(heading_from_geometry(200.0, 500.0), std::invalid_argument);
  CHECK_THROWS_AS(heading_from_geometry(100.0, 500.0), std::invalid_argument);

  double prev = 0.0;
  for (double r = 0.0; r < 20000.0; r += 250.0) {
    const double th = heading_from_geometry(300.0, r);
    CHECK(th > prev);
    CHECK(th < 90.0);
    prev = th;
  }
}

TEST_CASE("track slew limit") {
  const VehicleParams p;
  const TrackSpeeds a = slew_tracks({0.0, 0.0}, {0.9, -0.9}, 0.01, p);
  CHECK(a.v_l == doctest::Approx(0.02));
  CHECK(a.v_r == doctest::Approx(-0.02));
  const TrackSpeeds b = slew_tracks({0.5, 0.5}, {0.505, 0.5}, 0.01, p);
  CHECK(b.v_l == doctest::Approx(0.505));
}

TEST_CASE("footprint corners") {
  const VehicleParams p;
  const auto c = footprint({1.0, 2.0, kPi / 2.0}, p);
  CHECK(c[0].first == doctest::Approx(1.0 - 0.625));
  CHECK(c[0].second == doctest::Approx(2.0 + 0.6));
  CHECK(c[2].first == doctest::Approx(1.0 + 0.625));
  CHECK(c[2].second == doctest::Approx(2.0 - 0.6));
}
