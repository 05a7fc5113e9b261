#include "tracked/nn/model.hpp"

#include <limits>
#include <stdexcept>

namespace tracked::nn {

namespace {

void widen(Eigen::VectorXd& lo, Eigen::VectorXd& hi) {
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    if (!(hi(i) > lo(i))) {
      const double mid = lo(i);
      lo(i) = mid - 0.5;
      hi(i) = mid + 0.5;
    }
  }
}

}  // namespace

NormalizationStats NormalizationStats::fit(const std::vector<Matrix>& windows,
                                           const std::vector<Eigen::Vector2d>& targets) {
  if (windows.empty() || targets.empty()) throw std::invalid_argument("normalization: empty data");
  const Eigen::Index I = windows.front().cols();
  const double inf = std::numeric_limits<double>::infinity();
  NormalizationStats s;
  s.in_min = Eigen::VectorXd::Constant(I, inf);
  s.in_max = Eigen::VectorXd::Constant(I, -inf);
  for (const Matrix& w : windows) {
    s.in_min = s.in_min.cwiseMin(w.colwise().minCoeff().transpose());
    s.in_max = s.in_max.cwiseMax(w.colwise().maxCoeff().transpose());
  }
  s.out_min = Eigen::VectorXd::Constant(kOutputDim, inf);
  s.out_max = Eigen::VectorXd::Constant(kOutputDim, -inf);
  for (const auto& t : targets) {
    s.out_min = s.out_min.cwiseMin(t);
    s.out_max = s.out_max.cwiseMax(t);
  }
  widen(s.in_min, s.in_max);
  widen(s.out_min, s.out_max);
  return s;
}

NormalizationStats NormalizationStats::identity(int input_dim, int output_dim) {
  NormalizationStats s;
  s.in_min = Eigen::VectorXd::Constant(input_dim, -1.0);
  s.in_max = Eigen::VectorXd::Constant(input_dim, 1.0);
  s.out_min = Eigen::VectorXd::Constant(output_dim, -1.0);
  s.out_max = Eigen::VectorXd::Constant(output_dim, 1.0);
  return s;
}

void NormalizationStats::validate() const {
  if (in_min.size() != in_max.size() || out_min.size() != out_max.size()) {
    throw std::invalid_argument("normalization: size mismatch");
  }
  if (!((in_max - in_min).array() > 0.0).all() || !((out_max - out_min).array() > 0.0).all()) {
    throw std::invalid_argument("normalization: max must exceed min");
  }
}

Eigen::VectorXd NormalizationStats::normalize_input(const Eigen::VectorXd& x) const {
  return (2.0 * (x - in_min).array() / (in_max - in_min).array() - 1.0).matrix();
}

Eigen::VectorXd NormalizationStats::denormalize_input(const Eigen::VectorXd& x) const {
  return ((x.array() + 1.0) * 0.5 * (in_max - in_min).array() + in_min.array()).matrix();
}

Eigen::VectorXd NormalizationStats::normalize_output(const Eigen::VectorXd& y) const {
  return (2.0 * (y - out_min).array() / (out_max - out_min).array() - 1.0).matrix();
}

Eigen::VectorXd NormalizationStats::denormalize_output(const Eigen::VectorXd& y) const {
  return ((y.array() + 1.0) * 0.5 * (out_max - out_min).array() + out_min.array()).matrix();
}

Model Model::untrained(const ModelConfig& cfg, std::uint64_t seed) {
  Model m;
  m.config = cfg;
  m.norm = NormalizationStats::identity(cfg.input_dim, cfg.output_dim);
  m.params = ModelParams::random(cfg, seed);
  return m;
}

Prediction Model::predict(const Matrix& window) const {
  if (window.cols() != config.input_dim || window.rows() < 1) {
    throw std::invalid_argument("predict: window must have 12 columns and at least one row");
  }
  std::vector<Matrix> inputs;
  inputs.reserve(static_cast<std::size_t>(window.rows()));
  for (Eigen::Index t = 0; t < window.rows(); ++t) {
    inputs.emplace_back(norm.normalize_input(window.row(t).transpose()));
  }
  const ForwardCache cache = forward(inputs, params);
  const Eigen::VectorXd y = norm.denormalize_output(cache.y.col(0));
  return {y(0), y(1)};
}

std::vector<Matrix> pack_batch(const std::vector<Matrix>& windows, const std::vector<std::size_t>& indices,
                               const NormalizationStats& norm) {
  if (indices.empty()) throw std::invalid_argument("pack_batch: empty batch");
  const Eigen::Index T = windows[indices.front()].rows();
  const Eigen::Index I = windows[indices.front()].cols();
  const Eigen::Index B = static_cast<Eigen::Index>(indices.size());
  const Eigen::ArrayXd scale = 2.0 / (norm.in_max - norm.in_min).array();
  std::vector<Matrix> steps(static_cast<std::size_t>(T), Matrix(I, B));
  for (Eigen::Index b = 0; b < B; ++b) {
    const Matrix& w = windows[indices[static_cast<std::size_t>(b)]];
    for (Eigen::Index t = 0; t < T; ++t) {
      steps[static_cast<std::size_t>(t)].col(b) =
          ((w.row(t).transpose() - norm.in_min).array() * scale - 1.0).matrix();
    }
  }
  return steps;
}

Matrix pack_targets(const std::vector<Eigen::Vector2d>& targets, const std::vector<std::size_t>& indices,
                    const NormalizationStats& norm) {
  Matrix out(kOutputDim, static_cast<Eigen::Index>(indices.size()));
  for (std::size_t b = 0; b < indices.size(); ++b) {
    out.col(static_cast<Eigen::Index>(b)) = norm.normalize_output(targets[indices[b]]);
  }
  return out;
}

const Model& ModelBundle::route(const std::string& tag) const {
  for (const auto& [name, model] : models) {
    if (name == tag) return model;
  }
  for (const auto& [name, model] : models) {
    if (name == "all") return model;
  }
  throw std::out_of_range("model bundle: no network for terrain class '" + tag + "'");
}

}  // namespace tracked::nn
