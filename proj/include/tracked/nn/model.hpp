#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "tracked/nn/lstm.hpp"

namespace tracked::nn {

/// Per-column min/max scaling to [-1, 1], fitted on the training split.
struct NormalizationStats {
  Eigen::VectorXd in_min, in_max;    // input_dim
  Eigen::VectorXd out_min, out_max;  // output_dim

  /// Fits the ranges; a constant column gets a unit-wide range centred on its value.
  static NormalizationStats fit(const std::vector<Matrix>& windows, const std::vector<Eigen::Vector2d>& targets);
  static NormalizationStats identity(int input_dim, int output_dim);

  void validate() const;
  Eigen::VectorXd normalize_input(const Eigen::VectorXd& x) const;
  Eigen::VectorXd denormalize_input(const Eigen::VectorXd& x) const;
  Eigen::VectorXd normalize_output(const Eigen::VectorXd& y) const;
  Eigen::VectorXd denormalize_output(const Eigen::VectorXd& y) const;
};

struct Prediction {
  double theta = 0.0;    // degrees
  double omega_O = 0.0;  // rad/s
};

struct Model {
  ModelConfig config;
  NormalizationStats norm;
  ModelParams params;

  static Model untrained(const ModelConfig& cfg, std::uint64_t seed);

  /// `window` is window_len x 12 in raw feature units, oldest row first.
  Prediction predict(const Matrix& window) const;
};

/// Packs raw windows into the per-step normalised batch layout used by forward().
std::vector<Matrix> pack_batch(const std::vector<Matrix>& windows, const std::vector<std::size_t>& indices,
                               const NormalizationStats& norm);
Matrix pack_targets(const std::vector<Eigen::Vector2d>& targets, const std::vector<std::size_t>& indices,
                    const NormalizationStats& norm);

/// Optional pair of networks routed by terrain class.
struct ModelBundle {
  std::vector<std::pair<std::string, Model>> models;

  /// Exact tag match, else the "all" model, else throws std::out_of_range.
  const Model& route(const std::string& tag) const;
};

}  // namespace tracked::nn
