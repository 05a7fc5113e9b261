// Command-line front end: simulate, gen-dataset, train, eval, closed-loop, dse-check.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "tracked/nn/weights_io.hpp"
#include "tracked/sim/closed_loop.hpp"
#include "tracked/sim/dataset.hpp"
#include "tracked/sim/episode.hpp"
#include "tracked/sim/learning.hpp"

using namespace tracked;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void print_error(const std::string& command, const std::string& message) {
  std::cerr << json{{"error", {{"command", command}, {"message", message}}}}.dump() << '\n';
}

json axes_json(const std::vector<Axis>& axes) {
  json a = json::array();
  for (const Axis x : axes) a.push_back(to_string(x));
  return a;
}

int cmd_simulate(const std::string& scenario_path, const std::string& export_path) {
  sim::Scenario sc = sim::load_scenario(scenario_path);
  nn::ModelBundle bundle;
  const nn::ModelBundle* learned = nullptr;
  if (sc.controller == sim::ControllerKind::Learned) {
    fs::path w(sc.weights_path);
    if (w.is_relative()) w = fs::path(scenario_path).parent_path() / w;
    bundle = nn::load_weights(w.string());
    learned = &bundle;
  }
  const sim::Episode ep = sim::run_episode(sc, learned);
  if (!export_path.empty()) sim::export_trajectory(export_path, ep);
  const json out = {{"format_version", 1},
                    {"scenario", ep.scenario_name},
                    {"controller", to_string(sc.controller)},
                    {"outcome", to_string(ep.outcome)},
                    {"success", sim::success(ep)},
                    {"duration_s", ep.samples.back().time},
                    {"steps", ep.samples.size() - 1},
                    {"first_case", ep.first_case},
                    {"cases_seen", ep.cases_seen},
                    {"dse_max", ep.stability.dse_value},
                    {"violations", axes_json(ep.stability.per_axis_violations)}};
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_gen_dataset(int n, std::uint64_t seed, const std::string& out_dir) {
  const sim::DatasetManifest m = sim::generate_dataset(n, seed, out_dir);
  std::cout << m.to_json() << '\n';
  return 0;
}

int cmd_train(const std::string& data_dir, const std::string& out, const std::string& split, int epochs,
              std::uint64_t seed, int hidden, const std::string& history_prefix, bool quiet) {
  const sim::SplitMode mode = sim::split_mode_from_string(split);
  const sim::LoadedDataset data = sim::load_dataset(data_dir);
  nn::TrainConfig tc;
  tc.max_epochs = epochs;
  tc.seed = seed;
  tc.validate();
  nn::ModelConfig mc;
  mc.hidden_dim = hidden;
  mc.validate();
  const sim::BundleTraining trained =
      sim::train_bundle(data, sim::all_indices(data), mode, tc, mc, [quiet](const std::string& tag, const nn::EpochStats& s) {
        if (!quiet) {
          std::cerr << tag << " epoch " << s.epoch << " train_rmse " << s.train_rmse << " val_rmse " << s.val_rmse
                    << '\n';
        }
      });
  nn::save_weights(out, trained.bundle);

  const std::string prefix = history_prefix.empty() ? out : history_prefix;
  json runs = json::array();
  for (const auto& [tag, r] : trained.runs) {
    const std::string path = prefix + ".history." + tag + ".csv";
    std::ofstream h(path);
    if (!h) throw std::runtime_error("cannot write '" + path + "'");
    nn::write_history_csv(h, r.history);
    runs.push_back({{"tag", tag},
                    {"samples", r.train_indices.size() + r.validation_indices.size()},
                    {"epochs", r.history.size()},
                    {"best_epoch", r.best_epoch},
                    {"best_val_rmse", r.history.empty() ? 0.0 : r.history.back().best_val_rmse},
                    {"history", path}});
  }
  std::cout << json{{"format_version", 1}, {"weights", out}, {"networks", runs}}.dump(2) << '\n';
  return 0;
}

int cmd_eval(const std::string& weights, const std::string& data_dir) {
  const nn::ModelBundle bundle = nn::load_weights(weights);
  const sim::LoadedDataset data = sim::load_dataset(data_dir);
  const sim::BundleEvaluation e = sim::evaluate_bundle(bundle, data, sim::all_indices(data));
  std::cout << sim::evaluation_to_json(e) << '\n';
  return 0;
}

int cmd_closed_loop(const std::string& weights, int trials, std::uint64_t seed, const std::string& report,
                    const std::string& csv, bool all_layouts) {
  const nn::ModelBundle bundle = nn::load_weights(weights);
  sim::ClosedLoopOptions opt;
  opt.expert_solvable_only = !all_layouts;
  const sim::ClosedLoopReport r = sim::closed_loop_eval(bundle, trials, seed, opt);
  if (!report.empty()) {
    std::ofstream f(report);
    if (!f) throw std::runtime_error("cannot write '" + report + "'");
    f << r.to_json() << '\n';
  }
  if (!csv.empty()) {
    std::ofstream f(csv);
    if (!f) throw std::runtime_error("cannot write '" + csv + "'");
    r.write_csv(f);
  }
  json classes = json::object();
  for (const auto& [name, c] : r.per_class) classes[name] = {{"trials", c.trials}, {"successes", c.successes}};
  std::cout << json{{"format_version", 1},
                    {"trials", r.trials},
                    {"successes", r.successes},
                    {"success_rate_pct", r.success_rate_pct},
                    {"candidates_drawn", r.candidates_drawn},
                    {"expert_failures_skipped", r.expert_failures_skipped},
                    {"per_class", classes},
                    {"dse_max", r.dse_max}}
                   .dump(2)
            << '\n';
  return 0;
}

int cmd_dse_check(const std::string& path) {
  const auto rows = sim::read_trajectory(path);
  const DseReport rep = sim::replay_stability(rows);
  double recorded = 0.0;
  for (const auto& r : rows) recorded = std::max(recorded, r.dse);
  std::cout << json{{"format_version", 1},
                    {"rows", rows.size()},
                    {"dse_max", rep.dse_value},
                    {"recorded_dse_max", recorded},
                    {"stable", rep.stable},
                    {"violations", axes_json(rep.per_axis_violations)}}
                   .dump(2)
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tracked-vehicle obstacle avoidance simulator"};
  app.require_subcommand(1);

  auto* simulate = app.add_subcommand("simulate", "Run one scenario file");
  std::string scenario_path, export_path;
  simulate->add_option("scenario", scenario_path, "Scenario JSON")->required();
  simulate->add_option("--export", export_path, "Write the trajectory CSV here");

  auto* gen = app.add_subcommand("gen-dataset", "Generate an expert dataset");
  int n = 500;
  std::uint64_t seed = 1;
  std::string out_dir;
  gen->add_option("--n", n, "Number of scenarios")->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed, "Generator seed");
  gen->add_option("--out", out_dir, "Output directory")->required();

  auto* train = app.add_subcommand("train", "Train networks on a dataset");
  std::string data_dir, weights_out, split = "none", history_prefix;
  int epochs = 2000, hidden = nn::ModelConfig{}.hidden_dim;
  std::uint64_t train_seed = 1;
  bool quiet = false;
  train->add_option("--data", data_dir, "Dataset directory")->required();
  train->add_option("--out", weights_out, "Weights file")->required();
  train->add_option("--split", split, "slope: one network per terrain group; none: a single network");
  train->add_option("--epochs", epochs, "Maximum epochs");
  train->add_option("--seed", train_seed, "Training seed");
  train->add_option("--hidden", hidden, "Hidden units");
  train->add_option("--history", history_prefix, "Prefix for history CSV files (default: weights path)");
  train->add_flag("--quiet", quiet, "No per-epoch progress");

  auto* eval = app.add_subcommand("eval", "Score weights on a dataset");
  std::string eval_weights, eval_data;
  eval->add_option("--weights", eval_weights, "Weights file")->required();
  eval->add_option("--data", eval_data, "Dataset directory")->required();

  auto* closed = app.add_subcommand("closed-loop", "Randomised trials with the learned controller");
  std::string cl_weights, cl_report, cl_csv;
  int trials = 50;
  std::uint64_t cl_seed = 1;
  bool all_layouts = false;
  closed->add_option("--weights", cl_weights, "Weights file")->required();
  closed->add_option("--trials", trials, "Accepted trials")->check(CLI::PositiveNumber);
  closed->add_option("--seed", cl_seed, "Scenario seed");
  closed->add_option("--report", cl_report, "Write the JSON report here");
  closed->add_option("--csv", cl_csv, "Write the per-trial CSV here");
  closed->add_flag("--all-layouts", all_layouts, "Keep layouts the expert cannot pass");

  auto* check = app.add_subcommand("dse-check", "Recompute stability from a trajectory CSV");
  std::string trajectory;
  check->add_option("--trajectory", trajectory, "Exported trajectory CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    print_error("parse", e.what());
    return 2;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    if (*simulate) return cmd_simulate(scenario_path, export_path);
    if (*gen) return cmd_gen_dataset(n, seed, out_dir);
    if (*train) return cmd_train(data_dir, weights_out, split, epochs, train_seed, hidden, history_prefix, quiet);
    if (*eval) return cmd_eval(eval_weights, eval_data);
    if (*closed) return cmd_closed_loop(cl_weights, trials, cl_seed, cl_report, cl_csv, all_layouts);
    if (*check) return cmd_dse_check(trajectory);
  } catch (const std::exception& e) {
    print_error(name, e.what());
    return 1;
  }
  return 0;
}
