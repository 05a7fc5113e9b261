#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "tracked/nn/train.hpp"
#include "tracked/sim/dataset.hpp"

namespace tracked::sim {

enum class SplitMode { None, Slope };

SplitMode split_mode_from_string(const std::string& name);

struct BundleTraining {
  nn::ModelBundle bundle;
  std::vector<std::pair<std::string, nn::TrainResult>> runs;  // one per network tag
};

using TagEpochCallback = std::function<void(const std::string& tag, const nn::EpochStats&)>;

/// Trains one network on `indices` (tag "all"), or with SplitMode::Slope one
/// network per routing tag ("grade", then "cross").
BundleTraining train_bundle(const LoadedDataset& data, const std::vector<std::size_t>& indices, SplitMode mode,
                            const nn::TrainConfig& tc, const nn::ModelConfig& mc,
                            const TagEpochCallback& on_epoch = {});

struct StratumMetrics {
  std::string name;
  std::size_t count = 0;
  double avg_relative_error_pct = 0.0;
  double rmse_theta = 0.0;
  double rmse_omega = 0.0;
};

/// Slope strata, steepest first: "15" (|slope| >= 12), "6-9", "0".
inline constexpr const char* kSlopeStrata[] = {"15", "6-9", "0"};
std::string slope_stratum(double slope_deg);

struct BundleEvaluation {
  StratumMetrics overall;
  std::vector<StratumMetrics> strata;  // kSlopeStrata order; empty strata have count 0
};

/// Routes each sample to its terrain class network and scores the predictions.
BundleEvaluation evaluate_bundle(const nn::ModelBundle& bundle, const LoadedDataset& data,
                                 const std::vector<std::size_t>& indices);

std::vector<std::size_t> all_indices(const LoadedDataset& data);

/// True when the error does not grow from one stratum to the next flatter one.
bool trend_non_increasing(const BundleEvaluation& eval);

std::string evaluation_to_json(const BundleEvaluation& eval);

}  // namespace tracked::sim
