#include "tracked/sim/episode.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tracked::sim {

Features extract_features(const VehicleState& state, const RangeReadings& readings, const Target& target,
                          const Terrain& terrain, const SensorArray& sensor, const VehicleParams& params) {
  Features f{};
  for (int g = 0; g < kGroupCount; ++g) f[g] = readings.distance_mm[g] / sensor.max_range_mm;
  f[5] = state.roll;
  f[6] = state.pitch;
  f[7] = normalize_angle(bearing_to(state.pose, target) - state.pose.heading);
  f[8] = state.v_forward;
  f[9] = state.tracks.v_l / params.wheel_radius;
  f[10] = state.tracks.v_r / params.wheel_radius;
  f[11] = terrain_tilt_deg(state.pose.x, terrain);
  return f;
}

FeatureWindow::FeatureWindow(int length) : length_(length) {
  if (length < 1) throw std::invalid_argument("feature window length must be >= 1");
}

void FeatureWindow::push(const Features& f) {
  if (buf_.empty()) {
    buf_.assign(static_cast<std::size_t>(length_), f);
    return;
  }
  buf_.pop_front();
  buf_.push_back(f);
}

nn::Matrix FeatureWindow::matrix() const {
  if (buf_.empty()) throw std::logic_error("feature window is empty");
  nn::Matrix m(length_, nn::kInputDim);
  for (int t = 0; t < length_; ++t) {
    for (int k = 0; k < nn::kInputDim; ++k) m(t, k) = buf_[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)];
  }
  return m;
}

TrackCommand tracks_for(double theta_deg, double omega_O) {
  const double kappa = table_differential_ratio();
  const double s = theta_deg > 0.0 ? 1.0 : (theta_deg < 0.0 ? -1.0 : 0.0);
  return {omega_O * (1.0 - kappa * s), omega_O * (1.0 + kappa * s)};
}

LearnedController::LearnedController(const nn::ModelBundle& bundle, const ExpertConfig& cfg,
                                     const VehicleParams& params, LearnedConfig lcfg)
    : bundle_(bundle), cfg_(cfg), params_(params), lcfg_(lcfg) {
  cfg_.validate();
  if (bundle_.models.empty()) throw std::invalid_argument("learned controller: empty model bundle");
}

void LearnedController::begin(const VehicleState& state, const nn::Prediction& p) {
  ctrl_.phase = Phase::Avoid;
  ctrl_.maneuver_start_heading = state.pose.heading;
  ctrl_.turn_complete = false;
  ctrl_.clear_counter = 0;
  ctrl_.active_case = 0;
  ++ctrl_.maneuver_count;
  theta_sum_ = p.theta;
  theta_count_ = 1;
  omega_ = p.omega_O;
}

LearnedController::Tick LearnedController::step(const VehicleState& state, const RangeReadings& readings,
                                                const nn::Matrix& window, const Target& target,
                                                const std::string& network_tag) {
  const double omega_cap = params_.v_max / params_.wheel_radius;
  const double kappa = table_differential_ratio();
  const double heading = state.pose.heading;
  Tick tick;

  if (distance_to(state.pose, target) <= cfg_.reach_radius) {
    ctrl_.phase = Phase::Cruise;
    return tick;
  }
  const bool detected = classify(readings, cfg_.trigger_mm).has_value();

  auto predict = [&]() {
    nn::Prediction p = bundle_.route(network_tag).predict(window);
    p.omega_O = std::clamp(p.omega_O, 0.0, omega_cap / (1.0 + kappa));
    tick.prediction = p;
    return p;
  };
  auto cruise = [&]() {
    ctrl_.phase = Phase::Cruise;
    tick.command = heading_hold(heading, bearing_to(state.pose, target), cfg_.omega_s, cfg_.k_p, kappa, params_);
    return tick;
  };
  auto turn = [&]() {
    const double wanted = theta_sum_ / theta_count_;
    ctrl_.active = {wanted, 0.0, 0.0, omega_};
    const TrackCommand c = tracks_for(wanted, omega_);
    ctrl_.active.omega_L = c.omega_L;
    ctrl_.active.omega_R = c.omega_R;
    tick.command = c;
    return tick;
  };
  auto start = [&]() {
    begin(state, predict());
    return turn();
  };
  auto go_return = [&]() {
    const nn::Prediction p = predict();
    if (ctrl_.phase != Phase::Return) {
      ctrl_.phase = Phase::Return;
      return_elapsed_ = state.time;
      return_omega_ = p.omega_O;
    }
    if (std::abs(p.theta) < cfg_.return_tolerance_deg || state.time - return_elapsed_ >= lcfg_.return_timeout) {
      return cruise();
    }
    tick.command = heading_hold(heading, heading + deg2rad(p.theta), return_omega_, cfg_.k_return, kappa, params_);
    return tick;
  };

  switch (ctrl_.phase) {
    case Phase::Cruise:
      if (!detected) return cruise();
      ctrl_.initial_heading = heading;
      return start();

    case Phase::Avoid: {
      ctrl_.clear_counter = detected ? 0 : ctrl_.clear_counter + cfg_.control_period_steps;
      if (!ctrl_.turn_complete) {
        const nn::Prediction p = predict();
        theta_sum_ += p.theta;
        ++theta_count_;
        const double wanted = theta_sum_ / theta_count_;
        const double turned = rad2deg(normalize_angle(heading - ctrl_.maneuver_start_heading));
        if ((wanted < 0.0 && turned <= wanted) || (wanted > 0.0 && turned >= wanted) || wanted == 0.0) {
          ctrl_.turn_complete = true;
        } else {
          return turn();
        }
      }
      if (detected) return start();
      if (ctrl_.clear_counter >= cfg_.n_clear_steps) return go_return();
      const double hold = ctrl_.maneuver_start_heading + deg2rad(ctrl_.active.theta_m);
      tick.command = heading_hold(heading, hold, cfg_.omega_s, cfg_.k_p, kappa, params_);
      return tick;
    }

    case Phase::Return:
      if (detected) return start();
      return go_return();
  }
  return cruise();
}

const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::ReachedTarget: return "reached_target";
    case Outcome::Collision: return "collision";
    case Outcome::Unstable: return "unstable";
    case Outcome::Timeout: return "timeout";
  }
  return "?";
}

Episode run_episode(const Scenario& sc, const nn::ModelBundle* learned) {
  sc.validate();
  const bool use_learned = sc.controller == ControllerKind::Learned;
  if (use_learned && learned == nullptr) throw std::invalid_argument("run_episode: learned controller needs weights");

  const int window_len = use_learned ? learned->models.front().second.config.window_len : 10;
  FeatureWindow window(window_len);
  std::optional<LearnedController> policy;
  if (use_learned) policy.emplace(*learned, sc.expert, sc.vehicle);

  Episode ep;
  ep.scenario_name = sc.name;
  ep.terrain_class = sc.terrain_class;
  ep.slope_deg = sc.slope_deg;
  ep.wheel_radius = sc.vehicle.wheel_radius;

  VehicleState state;
  state.pose = sc.start;
  state.pose.heading = normalize_angle(sc.start.heading);
  const Attitude a0 = terrain_attitude(state.pose, sc.terrain);
  state.roll = a0.roll;
  state.pitch = a0.pitch;
  ep.initial = state;

  EpisodeSample first;
  first.state = state;
  first.readings = RangeReadings::clear(sc.sensor);
  ep.samples.push_back(first);

  ControllerState ctrl;
  TrackCommand cmd;
  TrainingLabel label;
  RangeReadings readings = RangeReadings::clear(sc.sensor);
  int maneuvers = 0;
  const int period = sc.expert.control_period_steps;
  const auto steps = static_cast<long>(std::ceil(sc.max_time / sc.dt - 1e-9));
  ep.outcome = Outcome::Timeout;

  for (long i = 0; i < steps; ++i) {
    EpisodeSample rec;
    rec.controller_tick = i % period == 0;
    if (rec.controller_tick) {
      readings = sense(state, sc.obstacles, sc.sensor, sc.vehicle);
      rec.features = extract_features(state, readings, sc.target, sc.terrain, sc.sensor, sc.vehicle);
      window.push(rec.features);
      if (use_learned) {
        const std::string tag = routing_tag(sc.terrain_class);
        cmd = policy->step(state, readings, window.matrix(), sc.target, tag).command;
        ctrl = policy->state();
      } else {
        const ExpertOutput out = expert_step(ctrl, state, readings, sc.target, sc.expert, sc.vehicle);
        cmd = out.command;
        ctrl = out.next;
      }
      label = label_sample(ctrl, state, cmd);
      if (ctrl.maneuver_count != maneuvers) {
        maneuvers = ctrl.maneuver_count;
        if (ctrl.active_case > 0) {
          if (ep.first_case == 0) ep.first_case = ctrl.active_case;
          if (std::find(ep.cases_seen.begin(), ep.cases_seen.end(), ctrl.active_case) == ep.cases_seen.end()) {
            ep.cases_seen.push_back(ctrl.active_case);
          }
        }
      }
    }

    const TrackSpeeds wanted = track_speeds_to_velocities(cmd, sc.vehicle);
    const TrackSpeeds realised = slew_tracks(state.tracks, wanted, sc.dt, sc.vehicle);
    state = step_kinematics(state, realised.v_l, realised.v_r, sc.dt, sc.vehicle);
    const Attitude att = terrain_attitude(state.pose, sc.terrain);
    state.roll = att.roll;
    state.pitch = att.pitch;

    rec.time = state.time;
    rec.state = state;
    rec.readings = readings;
    rec.command = cmd;
    rec.label = label;
    rec.phase = ctrl.phase;
    rec.active_case = ctrl.phase == Phase::Avoid ? ctrl.active_case : 0;
    ep.samples.push_back(rec);

    const bool hit = std::any_of(sc.obstacles.begin(), sc.obstacles.end(),
                                 [&](const Obstacle& o) { return footprint_hits(state.pose, sc.vehicle, o); });
    if (hit) {
      ep.outcome = Outcome::Collision;
      ep.collision_step = static_cast<int>(ep.samples.size()) - 1;
      break;
    }
    if (distance_to(state.pose, sc.target) <= sc.expert.reach_radius) {
      ep.outcome = Outcome::ReachedTarget;
      break;
    }
  }

  if (ep.samples.size() >= 3) {
    std::vector<VehicleState> states;
    states.reserve(ep.samples.size());
    for (const auto& s : ep.samples) states.push_back(s.state);
    const auto imu = imu_from_trajectory(states, sc.dt);
    for (std::size_t k = 0; k < imu.size(); ++k) ep.samples[k].imu = imu[k];
    ep.stability = episode_stability(imu);
  }
  if (ep.outcome != Outcome::Collision && !ep.stability.stable) ep.outcome = Outcome::Unstable;
  return ep;
}

bool success(const Episode& e) {
  return e.outcome == Outcome::ReachedTarget && e.stability.stable;
}

namespace {

constexpr const char* kTrajectoryHeader =
    "time,x,y,heading,roll,pitch,v,omega_L,omega_R,A,B,C,D,E,a_x,a_y,a_z,a_rx,a_ry,a_rz,beta,dse";

}  // namespace

void export_trajectory(std::ostream& out, const Episode& e) {
  out << kTrajectoryHeader << '\n';
  std::ostringstream line;
  line.precision(17);
  for (const auto& s : e.samples) {
    line.str("");
    const auto& st = s.state;
    line << s.time << ',' << st.pose.x << ',' << st.pose.y << ',' << st.pose.heading << ',' << st.roll << ','
         << st.pitch << ',' << st.v_forward << ',' << st.tracks.v_l / e.wheel_radius << ','
         << st.tracks.v_r / e.wheel_radius;
    for (double d : s.readings.distance_mm) line << ',' << d;
    const auto& m = s.imu;
    line << ',' << m.a_x << ',' << m.a_y << ',' << m.a_z << ',' << m.a_rx << ',' << m.a_ry << ',' << m.a_rz << ','
         << m.beta << ',' << dse(m);
    out << line.str() << '\n';
  }
  if (!out) throw std::runtime_error("trajectory: write failed");
}

void export_trajectory(const std::string& path, const Episode& e) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("trajectory: cannot open '" + path + "' for writing");
  export_trajectory(out, e);
}

std::vector<TrajectoryRow> read_trajectory(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("trajectory: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTrajectoryHeader) throw std::runtime_error("trajectory: unexpected header");
  std::vector<TrajectoryRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> v;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        v.push_back(std::stod(cell, &used));
        if (used != cell.size() && cell.substr(used) != "\r") throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw std::runtime_error("trajectory: bad number on line " + std::to_string(lineno));
      }
    }
    if (v.size() != 22) throw std::runtime_error("trajectory: expected 22 columns on line " + std::to_string(lineno));
    TrajectoryRow r;
    r.time = v[0];
    r.x = v[1];
    r.y = v[2];
    r.heading = v[3];
    r.roll = v[4];
    r.pitch = v[5];
    r.v = v[6];
    r.omega_L = v[7];
    r.omega_R = v[8];
    for (int g = 0; g < kGroupCount; ++g) r.readings[g] = v[9 + g];
    r.imu = {v[14], v[15], v[16], v[17], v[18], v[19], v[20], v[0]};
    r.dse = v[21];
    rows.push_back(r);
  }
  return rows;
}

std::vector<TrajectoryRow> read_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("trajectory: cannot open '" + path + "'");
  return read_trajectory(in);
}

DseReport replay_stability(const std::vector<TrajectoryRow>& rows) {
  if (rows.size() < 3) throw std::invalid_argument("replay: need at least 3 rows");
  const double dt = rows[1].time - rows[0].time;
  if (!(dt > 0.0)) throw std::invalid_argument("replay: time must increase");
  std::vector<VehicleState> states;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (k > 0 && std::abs(rows[k].time - rows[k - 1].time - dt) > 1e-6) {
      throw std::invalid_argument("replay: time steps are not uniform");
    }
    VehicleState s;
    s.pose = {rows[k].x, rows[k].y, rows[k].heading};
    s.roll = rows[k].roll;
    s.pitch = rows[k].pitch;
    s.v_forward = rows[k].v;
    s.time = rows[k].time;
    states.push_back(s);
  }
  return episode_stability(imu_from_trajectory(states, dt));
}

}  // namespace tracked::sim
