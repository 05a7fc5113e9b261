#include "tracked/sim/closed_loop.hpp"

#include <algorithm>
#include <ostream>
#include <random>
#include <stdexcept>

#include "json.hpp"

namespace tracked::sim {

using nlohmann::json;

namespace {

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

void finish(ClosedLoopReport& r) {
  std::vector<double> dse;
  r.trials = static_cast<int>(r.results.size());
  r.successes = 0;
  for (const auto& t : r.results) {
    dse.push_back(t.dse_max);
    auto& c = r.per_class[to_string(t.terrain_class)];
    ++c.trials;
    if (t.success) {
      ++r.successes;
      ++c.successes;
    }
  }
  r.success_rate_pct = r.trials == 0 ? 0.0 : 100.0 * r.successes / r.trials;
  r.dse_min = quantile(dse, 0.0);
  r.dse_median = quantile(dse, 0.5);
  r.dse_p90 = quantile(dse, 0.9);
  r.dse_max = quantile(dse, 1.0);
}

std::string axes_string(const std::vector<Axis>& axes) {
  std::string s;
  for (const Axis a : axes) {
    if (!s.empty()) s += ';';
    s += to_string(a);
  }
  return s;
}

}  // namespace

TrialResult summarize_trial(int trial, const Scenario& sc, const Episode& ep) {
  TrialResult t;
  t.trial = trial;
  t.scenario_name = sc.name;
  t.terrain_class = sc.terrain_class;
  t.slope_deg = sc.slope_deg;
  t.first_case = ep.first_case;
  t.outcome = ep.outcome;
  t.dse_max = ep.stability.dse_value;
  t.violations = ep.stability.per_axis_violations;
  t.success = success(ep);
  return t;
}

ClosedLoopReport closed_loop_eval(const nn::ModelBundle& bundle, int n_trials, std::uint64_t seed,
                                  const ClosedLoopOptions& options) {
  if (n_trials < 1) throw std::invalid_argument("closed_loop_eval: need at least one trial");
  ClosedLoopReport r;
  r.controller = "learned";
  r.seed = seed;
  std::mt19937_64 rng(seed);
  const long max_draws = static_cast<long>(n_trials) * options.max_draws_per_trial;
  while (static_cast<int>(r.results.size()) < n_trials) {
    if (r.candidates_drawn >= max_draws) {
      throw std::runtime_error("closed_loop_eval: too few expert-passable layouts");
    }
    Scenario sc = random_scenario(rng, "trial-" + std::to_string(r.candidates_drawn));
    ++r.candidates_drawn;
    if (options.expert_solvable_only && !success(run_episode(sc))) {
      ++r.expert_failures_skipped;
      continue;
    }
    sc.controller = ControllerKind::Learned;
    sc.weights_path = "<in-memory>";
    const Episode ep = run_episode(sc, &bundle);
    r.results.push_back(summarize_trial(static_cast<int>(r.results.size()), sc, ep));
  }
  finish(r);
  return r;
}

ClosedLoopReport canonical_expert_eval() {
  ClosedLoopReport r;
  r.controller = "expert";
  for (int k = 1; k <= 15; ++k) {
    const Scenario sc = canonical_scenario(k);
    ++r.candidates_drawn;
    r.results.push_back(summarize_trial(k, sc, run_episode(sc)));
  }
  finish(r);
  return r;
}

std::string ClosedLoopReport::to_json() const {
  json classes = json::object();
  for (const auto& [name, c] : per_class) classes[name] = {{"trials", c.trials}, {"successes", c.successes}};
  json rows = json::array();
  for (const auto& t : results) {
    json axes = json::array();
    for (const Axis a : t.violations) axes.push_back(to_string(a));
    rows.push_back({{"trial", t.trial},
                    {"scenario", t.scenario_name},
                    {"terrain_class", to_string(t.terrain_class)},
                    {"slope_deg", t.slope_deg},
                    {"first_case", t.first_case},
                    {"outcome", to_string(t.outcome)},
                    {"dse_max", t.dse_max},
                    {"violations", axes},
                    {"success", t.success}});
  }
  const json j = {
      {"format_version", kReportFormatVersion},
      {"controller", controller},
      {"seed", seed},
      {"trials", trials},
      {"successes", successes},
      {"success_rate_pct", success_rate_pct},
      {"candidates_drawn", candidates_drawn},
      {"expert_failures_skipped", expert_failures_skipped},
      {"per_class", classes},
      {"dse_max_distribution", {{"min", dse_min}, {"median", dse_median}, {"p90", dse_p90}, {"max", dse_max}}},
      {"trials_detail", rows},
  };
  return j.dump(2);
}

void ClosedLoopReport::write_csv(std::ostream& out) const {
  out << "trial,scenario,terrain_class,slope_deg,first_case,outcome,dse_max,violations,success\n";
  out.precision(17);
  for (const auto& t : results) {
    out << t.trial << ',' << t.scenario_name << ',' << to_string(t.terrain_class) << ',' << t.slope_deg << ','
        << t.first_case << ',' << to_string(t.outcome) << ',' << t.dse_max << ',' << axes_string(t.violations)
        << ',' << (t.success ? 1 : 0) << '\n';
  }
}

}  // namespace tracked::sim
