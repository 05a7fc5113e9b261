#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "json.hpp"
#include "tracked/sim/closed_loop.hpp"
#include "tracked/sim/dataset.hpp"
#include "tracked/sim/episode.hpp"
#include "tracked/sim/learning.hpp"

using namespace tracked;
using namespace tracked::sim;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tracked_test_sim_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string exported(const Episode& e) {
  std::ostringstream s;
  export_trajectory(s, e);
  return s.str();
}

int avoid_entries(const Episode& e) {
  int n = 0;
  Phase prev = Phase::Cruise;
  for (const auto& s : e.samples) {
    if (s.phase == Phase::Avoid && prev != Phase::Avoid) ++n;
    prev = s.phase;
  }
  return n;
}

nn::ModelBundle untrained_bundle() {
  nn::ModelBundle b;
  b.models.emplace_back("all", nn::Model::untrained(nn::ModelConfig{}, 3));
  return b;
}

}  // namespace

TEST_CASE("scenario JSON round trip") {
  std::mt19937_64 rng(5);
  const Scenario a = random_scenario(rng, "rt");
  const Scenario b = scenario_from_json(scenario_to_json(a));
  CHECK(scenario_to_json(b) == scenario_to_json(a));
  CHECK(b.terrain_class == a.terrain_class);
  CHECK(b.slope_deg == a.slope_deg);
  REQUIRE(b.obstacles.size() == 1);
  CHECK(b.obstacles[0].x == a.obstacles[0].x);
  CHECK(b.obstacles[0].half_width == a.obstacles[0].half_width);
  CHECK(b.seed == a.seed);
}

TEST_CASE("scenario validation rejects bad input") {
  const auto base = nlohmann::json::parse(scenario_to_json(canonical_scenario(4)));

  auto with = [&](auto edit) {
    auto j = base;
    edit(j);
    return j.dump();
  };
  CHECK_THROWS_AS(scenario_from_json("{ not json"), std::invalid_argument);
  CHECK_THROWS_AS(scenario_from_json(with([](auto& j) { j["format_version"] = 99; })), std::invalid_argument);
  CHECK_THROWS_AS(scenario_from_json(with([](auto& j) { j.erase("format_version"); })), std::invalid_argument);
  CHECK_THROWS_AS(scenario_from_json(with([](auto& j) { j["target"]["x"] = 40.0; })), std::invalid_argument);
  CHECK_THROWS_AS(scenario_from_json(with([](auto& j) { j["target"] = {{"x", 0.5}, {"y", 0.0}}; })),
                  std::invalid_argument);
  CHECK_THROWS_AS(scenario_from_json(with([](auto& j) { j["dt"] = 0.0; })), std::invalid_argument);
  CHECK_THROWS_AS(scenario_from_json(with([](auto& j) { j["controller"] = {{"kind", "learned"}}; })),
                  std::invalid_argument);
  CHECK_THROWS_AS(scenario_from_json(with([](auto& j) { j["controller"] = {{"kind", "autopilot"}}; })),
                  std::invalid_argument);
  CHECK_THROWS_AS(scenario_from_json(with([](auto& j) {
                    j["obstacles"] = {{{"x", 0.0}, {"y", 0.0}, {"half_width", 0.5}, {"depth", 0.5}}};
                  })),
                  std::invalid_argument);
  CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), std::runtime_error);
}

TEST_CASE("obstacle-free flat run goes straight to the target") {
  Scenario sc;
  sc.name = "open";
  const Episode e = run_episode(sc);
  CHECK(e.outcome == Outcome::ReachedTarget);
  CHECK(success(e));
  CHECK(avoid_entries(e) == 0);
  CHECK(e.first_case == 0);
  for (const auto& s : e.samples) {
    CHECK(std::abs(s.state.pose.y) < 1e-9);
    CHECK(std::abs(s.state.pose.heading) < 1e-12);
  }
  CHECK(e.stability.dse_value == doctest::Approx(0.0));
  CHECK(e.samples.front().time == 0.0);
  CHECK(e.samples.back().time < 20.0);
}

TEST_CASE("obstacle in the centre zone is avoided with one strategy-table manoeuvre") {
  const Scenario sc = canonical_scenario(3);
  const Episode e = run_episode(sc);
  CHECK(e.outcome == Outcome::ReachedTarget);
  CHECK(e.first_case == 3);
  CHECK(avoid_entries(e) == 1);
  bool saw_command = false;
  for (const auto& s : e.samples) {
    if (s.controller_tick && s.phase == Phase::Avoid) {
      const AvoidanceCommand c = lookup_command(3);
      if (s.command.omega_L == c.omega_L && s.command.omega_R == c.omega_R) saw_command = true;
      CHECK(s.label.theta == c.theta_m);
    }
  }
  CHECK(saw_command);
  // Turned right, then finished in cruise.
  const auto lowest = std::min_element(e.samples.begin(), e.samples.end(), [](const auto& a, const auto& b) {
    return a.state.pose.heading < b.state.pose.heading;
  });
  CHECK(rad2deg(lowest->state.pose.heading) <= -27.0);
  CHECK(e.samples.back().phase == Phase::Cruise);
}

TEST_CASE("uphill run with an obstacle on the right turns left and stays stable") {
  Scenario sc = canonical_scenario(5);
  sc.name = "uphill-right";
  sc.terrain_class = TerrainClass::Uphill;
  sc.slope_deg = 9.0;
  sc.terrain = ramp_terrain(TerrainClass::Uphill, 9.0);
  const Episode e = run_episode(sc);
  REQUIRE(e.first_case > 0);
  CHECK(lookup_command(e.first_case).theta_m > 0.0);
  const auto highest = std::max_element(e.samples.begin(), e.samples.end(), [](const auto& a, const auto& b) {
    return a.state.pose.heading < b.state.pose.heading;
  });
  CHECK(highest->state.pose.heading > 0.0);
  CHECK(e.outcome == Outcome::ReachedTarget);
  CHECK(e.stability.dse_value > 0.0);
  CHECK(e.stability.dse_value < 7.26);
  CHECK(e.stability.stable);
}

TEST_CASE("canonical scenarios start with their own case") {
  for (int k = 1; k <= 15; ++k) {
    CAPTURE(k);
    const Episode e = run_episode(canonical_scenario(k));
    CHECK(e.first_case == k);
  }
  CHECK_THROWS_AS(canonical_scenario(0), std::out_of_range);
  CHECK_THROWS_AS(canonical_scenario(16), std::out_of_range);
}

TEST_CASE("collision outcome matches the footprint test") {
  const Scenario sc = canonical_scenario(15);
  const Episode e = run_episode(sc);
  REQUIRE(e.outcome == Outcome::Collision);
  REQUIRE(e.collision_step > 0);
  CHECK(footprint_hits(e.samples[static_cast<std::size_t>(e.collision_step)].state.pose, sc.vehicle, sc.obstacles[0]));
  for (int i = 0; i < e.collision_step; ++i) {
    CHECK_FALSE(footprint_hits(e.samples[static_cast<std::size_t>(i)].state.pose, sc.vehicle, sc.obstacles[0]));
  }
}

TEST_CASE("episodes are deterministic") {
  std::mt19937_64 r1(99), r2(99);
  const Scenario a = random_scenario(r1, "d");
  const Scenario b = random_scenario(r2, "d");
  CHECK(exported(run_episode(a)) == exported(run_episode(b)));
}

TEST_CASE("trajectory export round trip") {
  Scenario sc = canonical_scenario(8);
  sc.terrain_class = TerrainClass::Cross;
  sc.slope_deg = 7.0;
  sc.terrain = ramp_terrain(TerrainClass::Cross, 7.0);
  const Episode e = run_episode(sc);
  std::istringstream in(exported(e));
  const auto rows = read_trajectory(in);
  REQUIRE(rows.size() == e.samples.size());
  double worst = 0.0;
  for (const auto& r : rows) worst = std::max(worst, std::abs(dse(r.imu) - r.dse));
  CHECK(worst <= 1e-9);
  const DseReport replay = replay_stability(rows);
  CHECK(replay.dse_value == doctest::Approx(e.stability.dse_value).epsilon(1e-6));
  CHECK(replay.stable == e.stability.stable);
}

TEST_CASE("trajectory export of an empty episode is the header only") {
  const std::string text = exported(Episode{});
  CHECK(std::count(text.begin(), text.end(), '\n') == 1);
  std::istringstream in(text);
  CHECK(read_trajectory(in).empty());
}

TEST_CASE("straight run exports a constant heading column") {
  const Episode e = run_episode(Scenario{});
  std::istringstream in(exported(e));
  const auto rows = read_trajectory(in);
  REQUIRE(rows.size() > 100);
  for (const auto& r : rows) CHECK(r.heading == rows.front().heading);
}

TEST_CASE("trajectory reader rejects malformed files") {
  std::istringstream empty("");
  CHECK_THROWS_AS(read_trajectory(empty), std::runtime_error);
  std::istringstream header("time,x\n");
  CHECK_THROWS_AS(read_trajectory(header), std::runtime_error);
  std::string text = exported(run_episode(Scenario{}));
  text += "1,2,3\n";
  std::istringstream short_row(text);
  CHECK_THROWS_AS(read_trajectory(short_row), std::runtime_error);
}

TEST_CASE("features follow the documented order") {
  Scenario sc = canonical_scenario(4);
  sc.terrain = ramp_terrain(TerrainClass::Uphill, 6.0);
  VehicleState s;
  s.pose = {8.0, 0.5, 0.1};
  s.tracks = {0.6, 0.8};
  s.v_forward = 0.7;
  s.roll = 0.01;
  s.pitch = 0.1;
  RangeReadings r = RangeReadings::clear(sc.sensor);
  r.distance_mm = {4000, 3000, 2000, 1000, 500};
  const Features f = extract_features(s, r, sc.target, sc.terrain, sc.sensor, sc.vehicle);
  CHECK(f[0] == 1.0);
  CHECK(f[3] == doctest::Approx(0.25));
  CHECK(f[4] == doctest::Approx(0.125));
  CHECK(f[5] == 0.01);
  CHECK(f[6] == 0.1);
  CHECK(f[7] == doctest::Approx(std::atan2(-0.5, 8.0) - 0.1));
  CHECK(f[8] == 0.7);
  CHECK(f[9] == doctest::Approx(0.6 / sc.vehicle.wheel_radius));
  CHECK(f[10] == doctest::Approx(0.8 / sc.vehicle.wheel_radius));
  CHECK(f[11] == doctest::Approx(6.0));
}

TEST_CASE("feature window pads with the first entry") {
  FeatureWindow w(3);
  Features a{}, b{};
  a[0] = 1.0;
  b[0] = 2.0;
  w.push(a);
  CHECK(w.matrix().col(0).isConstant(1.0));
  w.push(b);
  CHECK(w.matrix()(0, 0) == 1.0);
  CHECK(w.matrix()(1, 0) == 1.0);
  CHECK(w.matrix()(2, 0) == 2.0);
  CHECK_THROWS_AS(FeatureWindow(0), std::invalid_argument);
}

TEST_CASE("tracks_for keeps the mean speed and turns toward theta") {
  const TrackCommand left = tracks_for(20.0, 3.0);
  CHECK(left.mean() == doctest::Approx(3.0));
  CHECK(left.omega_R > left.omega_L);
  const TrackCommand right = tracks_for(-20.0, 3.0);
  CHECK(right.omega_L == doctest::Approx(left.omega_R));
  const TrackCommand straight = tracks_for(0.0, 3.0);
  CHECK(straight.omega_L == straight.omega_R);
}

TEST_CASE("dataset covers every canonical case and is deterministic") {
  const fs::path a = scratch("ds_a"), b = scratch("ds_b");
  const DatasetManifest m = generate_dataset(15, 3, a.string());
  generate_dataset(15, 3, b.string());
  CHECK(m.case_coverage.size() == 15);
  for (int k = 1; k <= 15; ++k) CHECK(m.case_coverage.count(k) == 1);
  CHECK(slurp(a / kRecordsFile) == slurp(b / kRecordsFile));
  CHECK(slurp(a / kManifestFile) == slurp(b / kManifestFile));

  std::ifstream in(a / kRecordsFile);
  std::string line;
  long lines = 0;
  while (std::getline(in, line)) {
    const auto r = nlohmann::json::parse(line);
    CHECK(r.at("features").size() == 12);
    CHECK(r.at("labels").size() == 2);
    CHECK(r.at("format_version") == kDatasetFormatVersion);
    ++lines;
  }
  CHECK(lines == m.record_count);

  const LoadedDataset d = load_dataset(a.string());
  CHECK(static_cast<long>(d.samples.size()) == m.sample_count);
  CHECK(d.samples.size() == d.classes.size());
  REQUIRE(d.samples.size() > 0);
  CHECK(d.samples.windows[0].rows() == 10);
  CHECK(d.samples.windows[0].cols() == 12);
  CHECK_NOTHROW(d.samples.validate());
}

TEST_CASE("random scenarios draw from the documented ranges") {
  std::mt19937_64 rng(17);
  std::map<TerrainClass, int> classes;
  for (int i = 0; i < 400; ++i) {
    const Scenario s = random_scenario(rng, "r");
    ++classes[s.terrain_class];
    REQUIRE(s.obstacles.size() == 1);
    const Obstacle& o = s.obstacles[0];
    const double face = o.x - 0.5 * o.depth;
    CHECK(face >= 5.0);
    CHECK(face <= 8.0);
    CHECK(2.0 * o.half_width >= 0.2);
    CHECK(2.0 * o.half_width <= 1.5);
    CHECK(std::abs(o.y) <= 0.925 + 1e-12);
    const double a = std::abs(s.slope_deg);
    switch (s.terrain_class) {
      case TerrainClass::Flat: CHECK(s.slope_deg == 0.0); break;
      case TerrainClass::Uphill: CHECK(s.slope_deg > 0.0); break;
      case TerrainClass::Downhill: CHECK(s.slope_deg < 0.0); break;
      case TerrainClass::Cross: CHECK(a > 0.0); break;
    }
    CHECK((a == 0.0 || a == 6.0 || a == 7.0 || a == 9.0 || a == 15.0));
  }
  CHECK(classes.size() == 4);
}

TEST_CASE("dataset loader rejects tampered files") {
  const fs::path dir = scratch("ds_bad");
  generate_dataset(2, 1, dir.string());
  std::ofstream(dir / kRecordsFile, std::ios::app) << "{ broken\n";
  CHECK_THROWS_AS(load_dataset(dir.string()), std::runtime_error);
  CHECK_THROWS_AS(load_dataset((dir / "missing").string()), std::runtime_error);
}

TEST_CASE("learned controller with untrained weights runs without crashing") {
  const nn::ModelBundle bundle = untrained_bundle();
  Scenario sc = canonical_scenario(2);
  sc.controller = ControllerKind::Learned;
  sc.weights_path = "in-memory";
  CHECK_THROWS_AS(run_episode(sc), std::invalid_argument);
  const Episode e = run_episode(sc, &bundle);
  CHECK(e.samples.size() > 1);

  const ClosedLoopReport r = closed_loop_eval(bundle, 4, 9);
  CHECK(r.trials == 4);
  CHECK(r.success_rate_pct >= 0.0);
  CHECK(r.success_rate_pct <= 100.0);
  CHECK(r.candidates_drawn == r.trials + r.expert_failures_skipped);
  const auto j = nlohmann::json::parse(r.to_json());
  CHECK(j.at("format_version") == kReportFormatVersion);
  CHECK(j.at("trials_detail").size() == 4);
  std::ostringstream csv;
  r.write_csv(csv);
  const std::string text = csv.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 5);
}

TEST_CASE("routing tags and split modes") {
  CHECK(routing_tag(TerrainClass::Cross) == "cross");
  CHECK(routing_tag(TerrainClass::Flat) == "grade");
  CHECK(routing_tag(TerrainClass::Uphill) == "grade");
  CHECK(routing_tag(TerrainClass::Downhill) == "grade");
  CHECK(split_mode_from_string("slope") == SplitMode::Slope);
  CHECK(split_mode_from_string("none") == SplitMode::None);
  CHECK_THROWS_AS(split_mode_from_string("terrain"), std::invalid_argument);
  CHECK(slope_stratum(15.0) == "15");
  CHECK(slope_stratum(-9.0) == "6-9");
  CHECK(slope_stratum(6.0) == "6-9");
  CHECK(slope_stratum(0.0) == "0");
}

TEST_CASE("trend check compares neighbouring strata") {
  BundleEvaluation e;
  e.strata = {{"15", 10, 12.0, 0, 0}, {"6-9", 10, 11.0, 0, 0}, {"0", 10, 11.0, 0, 0}};
  CHECK(trend_non_increasing(e));
  e.strata[2].avg_relative_error_pct = 11.5;
  CHECK_FALSE(trend_non_increasing(e));
  e.strata[2].avg_relative_error_pct = 5.0;
  e.strata[1].count = 0;
  CHECK_FALSE(trend_non_increasing(e));
}
