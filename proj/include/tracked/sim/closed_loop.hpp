#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "tracked/sim/episode.hpp"

namespace tracked::sim {

inline constexpr int kReportFormatVersion = 1;

struct TrialResult {
  int trial = 0;
  std::string scenario_name;
  TerrainClass terrain_class = TerrainClass::Flat;
  double slope_deg = 0.0;
  int first_case = 0;
  Outcome outcome = Outcome::Timeout;
  double dse_max = 0.0;
  std::vector<Axis> violations;
  bool success = false;
};

struct ClassSummary {
  int trials = 0;
  int successes = 0;
};

struct ClosedLoopReport {
  std::string controller;  // "learned" or "expert"
  std::uint64_t seed = 0;
  int trials = 0;
  int successes = 0;
  double success_rate_pct = 0.0;
  // Randomised layouts drawn before `trials` were accepted, and how many the
  // expert itself could not pass (those are skipped when filtering).
  int candidates_drawn = 0;
  int expert_failures_skipped = 0;
  std::map<std::string, ClassSummary> per_class;
  double dse_min = 0.0, dse_median = 0.0, dse_p90 = 0.0, dse_max = 0.0;
  std::vector<TrialResult> results;

  std::string to_json() const;
  void write_csv(std::ostream& out) const;
};

struct ClosedLoopOptions {
  // Keep only layouts the expert passes, so the score measures imitation
  // rather than the geometric reach of the rule set.
  bool expert_solvable_only = true;
  // Give up after this many candidate layouts per accepted trial.
  int max_draws_per_trial = 50;
};

/// Runs `n_trials` randomised scenarios with the learned controller.
ClosedLoopReport closed_loop_eval(const nn::ModelBundle& bundle, int n_trials, std::uint64_t seed,
                                  const ClosedLoopOptions& options = {});

/// Runs the expert on the 15 canonical layouts.
ClosedLoopReport canonical_expert_eval();

TrialResult summarize_trial(int trial, const Scenario& sc, const Episode& ep);

}  // namespace tracked::sim
