#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "tracked/expert.hpp"

using namespace tracked;

namespace {

RangeReadings readings_for_case(int k, double d_mm = 1000.0) {
  RangeReadings r = RangeReadings::clear(SensorArray{});
  const DetectionMask m = case_mask(k);
  for (int g = 0; g < kGroupCount; ++g) {
    if (m.test(g)) r.distance_mm[g] = d_mm;
  }
  return r;
}

VehicleState at(double x, double y, double heading) {
  VehicleState s;
  s.pose = {x, y, heading};
  return s;
}

}  // namespace

TEST_CASE("strategy table rows") {
  struct Row {
    double th, wl, wr, wo;
  };
  // Transcribed independently of the library table.
  const Row expected[15] = {{-6, 1.5, 0.5, 1.0},    {-20, 4.5, 1.6, 3.05}, {-28, 6.8, 2.4, 4.6},
                            {20, 1.6, 4.5, 3.05},   {6, 0.5, 1.5, 1.0},    {-20, 4.5, 1.6, 3.05},
                            {-28, 6.8, 2.4, 4.6},   {28, 2.4, 6.8, 4.6},   {20, 1.6, 4.5, 3.05},
                            {-28, 6.8, 2.4, 4.6},   {-45, 10.8, 3.9, 7.35}, {28, 2.4, 6.8, 4.6},
                            {-42, 10.0, 3.6, 6.8},  {42, 3.6, 10.0, 6.8},  {-65, 15.6, 5.6, 10.6}};
  for (int k = 1; k <= 15; ++k) {
    CAPTURE(k);
    const AvoidanceCommand c = lookup_command(k);
    CHECK(c.theta_m == expected[k - 1].th);
    CHECK(c.omega_L == expected[k - 1].wl);
    CHECK(c.omega_R == expected[k - 1].wr);
    CHECK(c.omega_O == expected[k - 1].wo);
    CHECK(c.omega_O == doctest::Approx(0.5 * (c.omega_L + c.omega_R)).epsilon(1e-15));
    CHECK((c.theta_m > 0) == (c.omega_R > c.omega_L));
  }
  CHECK_THROWS_AS(lookup_command(0), std::out_of_range);
  CHECK_THROWS_AS(lookup_command(16), std::out_of_range);
}

TEST_CASE("mirror antisymmetry of the table") {
  const std::pair<int, int> pairs[] = {{2, 4}, {3, 12}, {7, 8}, {13, 14}, {6, 9}, {1, 5}};
  for (auto [a, b] : pairs) {
    CAPTURE(a);
    const auto x = lookup_command(a);
    const auto y = lookup_command(b);
    CHECK(x.theta_m == -y.theta_m);
    CHECK(x.omega_L == y.omega_R);
    CHECK(x.omega_R == y.omega_L);
  }
}

TEST_CASE("cruise toward a target ahead at straight-running speed") {
  const VehicleParams p;
  const ExpertConfig cfg;
  const auto out = expert_step({}, at(0, 0, 0), RangeReadings::clear(SensorArray{}), {10, 0}, cfg, p);
  CHECK(out.command.omega_L == doctest::Approx(5.5));
  CHECK(out.command.omega_R == doctest::Approx(5.5));
  CHECK(out.next.phase == Phase::Cruise);

  const auto label = label_sample(out.next, at(0, 0, 0), out.command);
  CHECK(label.theta == 0.0);
  CHECK(label.omega_O == doctest::Approx(5.5));

  // Target to the left: right track faster.
  const auto left = expert_step({}, at(0, 0, 0), RangeReadings::clear(SensorArray{}), {10, 3}, cfg, p);
  CHECK(left.command.omega_R > left.command.omega_L);
  CHECK(left.command.mean() == doctest::Approx(5.5));
}

TEST_CASE("stop at target") {
  const auto out = expert_step({}, at(9.5, 0, 0), RangeReadings::clear(SensorArray{}), {10, 0}, ExpertConfig{},
                               VehicleParams{});
  CHECK(out.command.omega_L == 0.0);
  CHECK(out.command.omega_R == 0.0);
}

TEST_CASE("detection enters Avoid with the table command until the heading change is reached") {
  const VehicleParams p;
  const ExpertConfig cfg;
  const Target target{20, 0};
  auto out = expert_step({}, at(0, 0, 0.1), readings_for_case(4), target, cfg, p);
  CHECK(out.next.phase == Phase::Avoid);
  CHECK(out.next.active_case == 4);
  CHECK(out.command.omega_L == 1.6);
  CHECK(out.command.omega_R == 4.5);
  CHECK(out.next.initial_heading == doctest::Approx(0.1));

  // Obstacle vanished, heading changed by less than 20 degrees: keep turning.
  const auto clear = RangeReadings::clear(SensorArray{});
  auto mid = expert_step(out.next, at(0.5, 0, 0.1 + deg2rad(10)), clear, target, cfg, p);
  CHECK(mid.next.phase == Phase::Avoid);
  CHECK(mid.command.omega_L == 1.6);
  CHECK(mid.command.omega_R == 4.5);

  // Heading change reached: leaves the table command, then returns once clear long enough.
  auto done = expert_step(mid.next, at(1.0, 0.1, 0.1 + deg2rad(20.5)), clear, target, cfg, p);
  CHECK(done.next.turn_complete);
  CHECK(done.next.phase == Phase::Return);
  CHECK(done.command.omega_L > done.command.omega_R);

  const auto label = label_sample(done.next, at(1.0, 0.1, 0.1 + deg2rad(20.5)), done.command);
  CHECK(label.theta == doctest::Approx(-20.5));

  // Back within tolerance of the initial course: Cruise.
  auto back = expert_step(done.next, at(2.0, 0.3, 0.1 + deg2rad(1.0)), clear, target, cfg, p);
  CHECK(back.next.phase == Phase::Cruise);
}

TEST_CASE("re-detection during Return re-enters Avoid") {
  const VehicleParams p;
  const ExpertConfig cfg;
  ControllerState c;
  c.phase = Phase::Return;
  c.initial_heading = 0.0;
  const auto out = expert_step(c, at(1, 1, 0.4), readings_for_case(3), {20, 0}, cfg, p);
  CHECK(out.next.phase == Phase::Avoid);
  CHECK(out.next.active_case == 3);
  CHECK(out.next.initial_heading == 0.0);
  CHECK(out.next.maneuver_start_heading == doctest::Approx(0.4));
}

TEST_CASE("labels for Avoid rows") {
  ControllerState c;
  c.phase = Phase::Avoid;
  c.active = lookup_command(8);
  auto l = label_sample(c, at(0, 0, 0), c.active.tracks());
  CHECK(l.theta == 28.0);
  CHECK(l.omega_O == doctest::Approx(4.6));
  c.active = lookup_command(13);
  l = label_sample(c, at(0, 0, 0), c.active.tracks());
  CHECK(l.theta == -42.0);
  CHECK(l.omega_O == doctest::Approx(6.8));
}

TEST_CASE("heading hold keeps tracks forward and under v_max") {
  const VehicleParams p;
  const double cap = p.v_max / p.wheel_radius;
  for (double err = -3.0; err <= 3.0; err += 0.1) {
    for (double omega : {0.5, 5.5, 16.0}) {
      const auto c = heading_hold(0.0, err, omega, 5.0, 0.5, p);
      CHECK(c.omega_L >= 0.0);
      CHECK(c.omega_R >= 0.0);
      CHECK(c.omega_L <= cap + 1e-12);
      CHECK(c.omega_R <= cap + 1e-12);
      CHECK(c.mean() == doctest::Approx(omega));
    }
  }
}

TEST_CASE("expert config validation") {
  ExpertConfig c;
  CHECK_NOTHROW(c.validate());
  c.trigger_mm = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = ExpertConfig{};
  c.n_clear_steps = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}
