#include "tracked/sim/learning.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace tracked::sim {

SplitMode split_mode_from_string(const std::string& name) {
  if (name == "none") return SplitMode::None;
  if (name == "slope") return SplitMode::Slope;
  throw std::invalid_argument("unknown split mode '" + name + "' (expected slope or none)");
}

BundleTraining train_bundle(const LoadedDataset& data, const std::vector<std::size_t>& indices, SplitMode mode,
                            const nn::TrainConfig& tc, const nn::ModelConfig& mc,
                            const TagEpochCallback& on_epoch) {
  std::vector<std::pair<std::string, std::vector<std::size_t>>> groups;
  if (mode == SplitMode::None) {
    groups.emplace_back("all", indices);
  } else {
    groups.emplace_back("grade", std::vector<std::size_t>{});
    groups.emplace_back("cross", std::vector<std::size_t>{});
    for (const std::size_t i : indices) {
      (routing_tag(data.classes.at(i)) == "cross" ? groups[1] : groups[0]).second.push_back(i);
    }
  }

  BundleTraining out;
  for (const auto& [tag, idx] : groups) {
    if (idx.empty()) throw std::invalid_argument("train: no samples for network '" + tag + "'");
    const nn::SampleSet subset = data.samples.subset(idx);
    nn::EpochCallback cb;
    if (on_epoch) cb = [&on_epoch, t = tag](const nn::EpochStats& s) { on_epoch(t, s); };
    nn::TrainResult r = nn::train(subset, tc, mc, cb);
    out.bundle.models.emplace_back(tag, r.model);
    out.runs.emplace_back(tag, std::move(r));
  }
  return out;
}

std::string slope_stratum(double slope_deg) {
  const double a = std::abs(slope_deg);
  if (a >= 12.0) return "15";
  if (a > 0.0) return "6-9";
  return "0";
}

namespace {

StratumMetrics score(const std::string& name, const std::vector<Eigen::Vector2d>& pred,
                     const std::vector<Eigen::Vector2d>& target) {
  StratumMetrics m;
  m.name = name;
  m.count = pred.size();
  if (pred.empty()) return m;
  double st = 0.0, so = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const Eigen::Vector2d d = pred[i] - target[i];
    st += d[0] * d[0];
    so += d[1] * d[1];
  }
  m.rmse_theta = std::sqrt(st / static_cast<double>(pred.size()));
  m.rmse_omega = std::sqrt(so / static_cast<double>(pred.size()));
  m.avg_relative_error_pct = nn::average_relative_error_pct(pred, target);
  return m;
}

}  // namespace

BundleEvaluation evaluate_bundle(const nn::ModelBundle& bundle, const LoadedDataset& data,
                                 const std::vector<std::size_t>& indices) {
  std::vector<Eigen::Vector2d> pred, target;
  std::vector<std::vector<Eigen::Vector2d>> sp(std::size(kSlopeStrata)), st(std::size(kSlopeStrata));
  for (const std::size_t i : indices) {
    const nn::Model& model = bundle.route(routing_tag(data.classes.at(i)));
    const nn::Prediction p = model.predict(data.samples.windows.at(i));
    const Eigen::Vector2d y(p.theta, p.omega_O);
    pred.push_back(y);
    target.push_back(data.samples.targets[i]);
    const std::string s = slope_stratum(data.samples.slope_deg[i]);
    for (std::size_t k = 0; k < std::size(kSlopeStrata); ++k) {
      if (s == kSlopeStrata[k]) {
        sp[k].push_back(y);
        st[k].push_back(data.samples.targets[i]);
      }
    }
  }
  BundleEvaluation e;
  e.overall = score("all", pred, target);
  for (std::size_t k = 0; k < std::size(kSlopeStrata); ++k) e.strata.push_back(score(kSlopeStrata[k], sp[k], st[k]));
  return e;
}

std::vector<std::size_t> all_indices(const LoadedDataset& data) {
  std::vector<std::size_t> idx(data.samples.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return idx;
}

bool trend_non_increasing(const BundleEvaluation& eval) {
  const StratumMetrics* prev = nullptr;
  for (const auto& s : eval.strata) {
    if (s.count == 0) return false;
    if (prev != nullptr && s.avg_relative_error_pct > prev->avg_relative_error_pct) return false;
    prev = &s;
  }
  return true;
}

std::string evaluation_to_json(const BundleEvaluation& eval) {
  auto row = [](const StratumMetrics& m) {
    return nlohmann::json{{"count", m.count},
                          {"avg_relative_error_pct", m.avg_relative_error_pct},
                          {"rmse_theta_deg", m.rmse_theta},
                          {"rmse_omega_rad_s", m.rmse_omega}};
  };
  nlohmann::json strata = nlohmann::json::object();
  for (const auto& s : eval.strata) strata[s.name] = row(s);
  const nlohmann::json j = {{"format_version", 1},
                            {"overall", row(eval.overall)},
                            {"slope_strata", strata},
                            {"trend_non_increasing", trend_non_increasing(eval)}};
  return j.dump(2);
}

}  // namespace tracked::sim
