#include "tracked/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <random>
#include <stdexcept>

namespace tracked::nn {

void SampleSet::validate() const {
  if (windows.size() != targets.size() || windows.size() != episode_ids.size() ||
      windows.size() != slope_deg.size()) {
    throw std::invalid_argument("sample set: array sizes differ");
  }
}

SampleSet SampleSet::subset(const std::vector<std::size_t>& indices) const {
  SampleSet s;
  for (std::size_t i : indices) {
    s.windows.push_back(windows.at(i));
    s.targets.push_back(targets.at(i));
    s.episode_ids.push_back(episode_ids.at(i));
    s.slope_deg.push_back(slope_deg.at(i));
  }
  return s;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("train: learning rate must be positive");
  if (batch_size < 1) throw std::invalid_argument("train: batch size must be >= 1");
  if (max_epochs < 1 || max_epochs > 2000) throw std::invalid_argument("train: max_epochs must be in 1..2000");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw std::invalid_argument("train: validation fraction must be in [0, 1)");
  }
  if (patience < 1) throw std::invalid_argument("train: patience must be >= 1");
}

void split_by_episode(const SampleSet& data, double validation_fraction, std::uint64_t seed,
                      std::vector<std::size_t>& train, std::vector<std::size_t>& validation) {
  std::vector<int> episodes(data.episode_ids.begin(), data.episode_ids.end());
  std::sort(episodes.begin(), episodes.end());
  episodes.erase(std::unique(episodes.begin(), episodes.end()), episodes.end());
  std::mt19937_64 rng(seed);
  std::shuffle(episodes.begin(), episodes.end(), rng);

  const auto n_val = static_cast<std::size_t>(std::floor(validation_fraction * static_cast<double>(episodes.size())));
  std::map<int, bool> is_val;
  for (std::size_t k = 0; k < episodes.size(); ++k) is_val[episodes[k]] = k < n_val;

  train.clear();
  validation.clear();
  for (std::size_t i = 0; i < data.size(); ++i) {
    (is_val[data.episode_ids[i]] ? validation : train).push_back(i);
  }
}

namespace {

struct Adam {
  std::vector<Matrix> m, v;
  long step = 0;

  explicit Adam(const ModelParams& p) {
    for (const Matrix* t : p.tensors()) {
      m.push_back(Matrix::Zero(t->rows(), t->cols()));
      v.push_back(Matrix::Zero(t->rows(), t->cols()));
    }
  }

  void apply(ModelParams& params, const ModelParams& grads, const TrainConfig& cfg) {
    ++step;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    auto ps = params.tensors();
    auto gs = grads.tensors();
    for (std::size_t k = 0; k < ps.size(); ++k) {
      const Matrix& g = *gs[k];
      m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g;
      v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g.cwiseProduct(g);
      *ps[k] -= (cfg.learning_rate * (m[k] / c1).array() / ((v[k] / c2).array().sqrt() + cfg.epsilon)).matrix();
    }
  }
};

double rmse_on(const Model& model, const SampleSet& data, const std::vector<std::size_t>& indices) {
  if (indices.empty()) return 0.0;
  constexpr std::size_t kChunk = 512;
  double sq = 0.0;
  for (std::size_t start = 0; start < indices.size(); start += kChunk) {
    const std::vector<std::size_t> chunk(indices.begin() + static_cast<std::ptrdiff_t>(start),
                                         indices.begin() + static_cast<std::ptrdiff_t>(std::min(indices.size(), start + kChunk)));
    const ForwardCache cache = forward(pack_batch(data.windows, chunk, model.norm), model.params);
    sq += (cache.y - pack_targets(data.targets, chunk, model.norm)).squaredNorm();
  }
  return std::sqrt(sq / static_cast<double>(indices.size() * kOutputDim));
}

}  // namespace

TrainResult train(const SampleSet& data, const TrainConfig& cfg, const ModelConfig& model_cfg,
                  const EpochCallback& on_epoch) {
  data.validate();
  if (data.size() == 0) throw std::invalid_argument("train: empty dataset");
  cfg.validate();
  model_cfg.validate();
  for (const Matrix& w : data.windows) {
    if (w.rows() != model_cfg.window_len || w.cols() != model_cfg.input_dim) {
      throw std::invalid_argument("train: window shape does not match model config");
    }
  }

  TrainResult result;
  split_by_episode(data, cfg.validation_fraction, cfg.seed, result.train_indices, result.validation_indices);
  if (result.train_indices.empty()) throw std::invalid_argument("train: no training episodes after split");
  const std::vector<std::size_t>& val =
      result.validation_indices.empty() ? result.train_indices : result.validation_indices;

  std::vector<Matrix> train_windows;
  std::vector<Eigen::Vector2d> train_targets;
  for (std::size_t i : result.train_indices) {
    train_windows.push_back(data.windows[i]);
    train_targets.push_back(data.targets[i]);
  }

  Model model;
  model.config = model_cfg;
  model.norm = NormalizationStats::fit(train_windows, train_targets);
  model.params = ModelParams::random(model_cfg, cfg.seed);
  result.model = model;

  Adam adam(model.params);
  ModelParams grads = ModelParams::zeros(model_cfg);
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order = result.train_indices;
  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::vector<std::size_t> batch(
          order.begin() + static_cast<std::ptrdiff_t>(start),
          order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size))));
      const auto inputs = pack_batch(data.windows, batch, model.norm);
      const Matrix targets = pack_targets(data.targets, batch, model.norm);
      loss_sum += loss_and_gradients(inputs, targets, model.params, grads);
      adam.apply(model.params, grads, cfg);
      ++batches;
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.loss = loss_sum / batches;
    stats.train_rmse = rmse_on(model, data, result.train_indices);
    stats.val_rmse = rmse_on(model, data, val);
    if (stats.val_rmse < best) {
      best = stats.val_rmse;
      since_best = 0;
      result.model = model;
      result.best_epoch = epoch;
    } else {
      ++since_best;
    }
    stats.best_val_rmse = best;
    result.history.push_back(stats);
    if (on_epoch) on_epoch(stats);
    if (!model.params.all_finite()) throw std::runtime_error("train: parameters diverged");
    if (since_best >= cfg.patience) break;
  }
  return result;
}

double average_relative_error_pct(const std::vector<Eigen::Vector2d>& predictions,
                                  const std::vector<Eigen::Vector2d>& targets, double floor) {
  if (predictions.size() != targets.size()) throw std::invalid_argument("relative error: size mismatch");
  if (targets.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    for (int k = 0; k < kOutputDim; ++k) {
      sum += std::abs(predictions[i](k) - targets[i](k)) / std::max(std::abs(targets[i](k)), floor);
    }
  }
  return 100.0 * sum / static_cast<double>(targets.size() * kOutputDim);
}

std::vector<Eigen::Vector2d> predict_all(const Model& model, const SampleSet& data) {
  std::vector<Eigen::Vector2d> out;
  out.reserve(data.size());
  constexpr std::size_t kChunk = 512;
  for (std::size_t start = 0; start < data.size(); start += kChunk) {
    std::vector<std::size_t> chunk;
    for (std::size_t i = start; i < std::min(data.size(), start + kChunk); ++i) chunk.push_back(i);
    const ForwardCache cache = forward(pack_batch(data.windows, chunk, model.norm), model.params);
    for (Eigen::Index b = 0; b < cache.y.cols(); ++b) {
      out.emplace_back(model.norm.denormalize_output(cache.y.col(b)));
    }
  }
  return out;
}

Metrics evaluate(const Model& model, const SampleSet& data) {
  data.validate();
  Metrics m;
  m.count = data.size();
  if (data.size() == 0) return m;
  const auto pred = predict_all(model, data);
  double sq_norm = 0.0, sq_theta = 0.0, sq_omega = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Eigen::Vector2d d = pred[i] - data.targets[i];
    const Eigen::Vector2d dn = model.norm.normalize_output(pred[i]) - model.norm.normalize_output(data.targets[i]);
    sq_norm += dn.squaredNorm();
    sq_theta += d(0) * d(0);
    sq_omega += d(1) * d(1);
  }
  const double n = static_cast<double>(data.size());
  m.rmse_normalized = std::sqrt(sq_norm / (n * kOutputDim));
  m.rmse_theta = std::sqrt(sq_theta / n);
  m.rmse_omega = std::sqrt(sq_omega / n);
  m.avg_relative_error_pct = average_relative_error_pct(pred, data.targets);
  return m;
}

void write_history_csv(std::ostream& out, const std::vector<EpochStats>& history) {
  out << "epoch,train_rmse,val_rmse,loss\n";
  out.precision(17);
  for (const auto& h : history) {
    out << h.epoch << ',' << h.train_rmse << ',' << h.val_rmse << ',' << h.loss << '\n';
  }
}

}  // namespace tracked::nn
