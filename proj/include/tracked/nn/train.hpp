#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "tracked/nn/model.hpp"

namespace tracked::nn {

/// Windows with their expert targets. Parallel arrays; one entry per sample.
struct SampleSet {
  std::vector<Matrix> windows;            // window_len x 12, raw units
  std::vector<Eigen::Vector2d> targets;   // (theta deg, omega_O rad/s)
  std::vector<int> episode_ids;
  std::vector<double> slope_deg;          // terrain slope at the sample, for stratified reports

  std::size_t size() const { return windows.size(); }
  void validate() const;
  SampleSet subset(const std::vector<std::size_t>& indices) const;
};

struct TrainConfig {
  double learning_rate = 0.005;
  int batch_size = 20;
  int max_epochs = 2000;
  std::uint64_t seed = 1;
  double validation_fraction = 0.2;
  int patience = 40;  // epochs without validation improvement before stopping
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

struct EpochStats {
  int epoch = 0;
  double train_rmse = 0.0;  // normalised output units
  double val_rmse = 0.0;
  double loss = 0.0;        // mean training loss over the epoch's batches
  double best_val_rmse = 0.0;
};

struct TrainResult {
  Model model;  // best-validation weights
  std::vector<EpochStats> history;
  int best_epoch = 0;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> validation_indices;
};

/// Splits whole episodes into training and validation index sets.
void split_by_episode(const SampleSet& data, double validation_fraction, std::uint64_t seed,
                      std::vector<std::size_t>& train, std::vector<std::size_t>& validation);

using EpochCallback = std::function<void(const EpochStats&)>;

/// Mini-batch Adam with early stopping on validation RMSE.
/// Throws std::invalid_argument on an empty dataset.
TrainResult train(const SampleSet& data, const TrainConfig& train_cfg, const ModelConfig& model_cfg,
                  const EpochCallback& on_epoch = {});

struct Metrics {
  std::size_t count = 0;
  double rmse_normalized = 0.0;
  double rmse_theta = 0.0;
  double rmse_omega = 0.0;
  double avg_relative_error_pct = 0.0;
};

inline constexpr double kRelativeErrorFloor = 0.1;

/// Average relative error guards small targets with max(|target|, floor).
double average_relative_error_pct(const std::vector<Eigen::Vector2d>& predictions,
                                  const std::vector<Eigen::Vector2d>& targets,
                                  double floor = kRelativeErrorFloor);

std::vector<Eigen::Vector2d> predict_all(const Model& model, const SampleSet& data);

Metrics evaluate(const Model& model, const SampleSet& data);

void write_history_csv(std::ostream& out, const std::vector<EpochStats>& history);

}  // namespace tracked::nn
