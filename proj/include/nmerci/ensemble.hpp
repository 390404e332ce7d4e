#pragma once

// Uncertainty estimators built on nn::Regressor. Every ensemble reports the
// member mean as prediction and the population (divide-by-M) standard
// deviation of member outputs as uncertainty.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "nmerci/error.hpp"
#include "nmerci/mlp.hpp"

namespace nmerci {

enum class MethodKind {
  monte_carlo_dropout,
  multi_inits,
  bagging,
  multi_epochs,
  multi_networks,
  learned_error,
};

struct UncertainPrediction {
  double y_hat = 0.0;
  double sigma = 0.0;

  friend bool operator==(const UncertainPrediction&, const UncertainPrediction&) = default;
};

// Points plus the raw member outputs they were reduced from.
struct EnsemblePrediction {
  std::vector<UncertainPrediction> points;
  // [member][point]; empty for methods without members (LearnedError).
  std::vector<std::vector<double>> member_outputs;
};

using Inputs = std::vector<std::vector<double>>;

// Mean and population standard deviation across members, per point.
inline std::vector<UncertainPrediction> reduce_members(
    const std::vector<std::vector<double>>& member_outputs) {
  if (member_outputs.empty()) throw Error("no ensemble members");
  const std::size_t points = member_outputs.front().size();
  const auto m = static_cast<double>(member_outputs.size());
  std::vector<UncertainPrediction> out(points);
  for (std::size_t j = 0; j < points; ++j) {
    double sum = 0.0;
    for (const auto& member : member_outputs) sum += member[j];
    const double mean = sum / m;
    double ss = 0.0;
    for (const auto& member : member_outputs) ss += (member[j] - mean) * (member[j] - mean);
    out[j] = {mean, std::sqrt(ss / m)};
  }
  return out;
}

class Ensemble {
 public:
  explicit Ensemble(std::vector<nn::Regressor> members) : members_(std::move(members)) {
    if (members_.size() < 2) throw UsageError("an ensemble needs at least 2 members");
  }

  [[nodiscard]] std::size_t size() const noexcept { return members_.size(); }
  [[nodiscard]] const std::vector<nn::Regressor>& members() const noexcept { return members_; }

  [[nodiscard]] EnsemblePrediction predict(const Inputs& xs) const {
    EnsemblePrediction out;
    for (const auto& member : members_) {
      std::vector<double> outputs;
      outputs.reserve(xs.size());
      for (const auto& x : xs) outputs.push_back(member.predict(x));
      out.member_outputs.push_back(std::move(outputs));
    }
    out.points = reduce_members(out.member_outputs);
    return out;
  }

 private:
  std::vector<nn::Regressor> members_;
};

namespace detail {

inline nn::Regressor fit_member(const nn::MlpSpec& spec, std::span<const nn::Example> data,
                                const nn::TrainConfig& cfg, std::size_t index) {
  try {
    return nn::fit_regressor(spec, data, cfg);
  } catch (const TrainingDiverged& e) {
    throw TrainingDiverged("ensemble member " + std::to_string(index) + ": " + e.what());
  }
}

}  // namespace detail

// T stochastic passes with dropout active. Pass t uses one generator stream
// for all points, seeded from (seed, t).
inline EnsemblePrediction mc_dropout(const nn::Regressor& model, const Inputs& xs,
                                     std::size_t passes, std::uint64_t seed) {
  if (model.net().spec().dropout_p <= 0.0) throw UsageError("MCD requires dropout");
  if (passes < 2) throw UsageError("MCD needs at least 2 passes");
  EnsemblePrediction out;
  for (std::size_t t = 0; t < passes; ++t) {
    nn::Rng rng(nn::derive_seed(seed, t));
    std::vector<double> outputs;
    outputs.reserve(xs.size());
    for (const auto& x : xs) outputs.push_back(model.predict_stochastic(x, rng));
    out.member_outputs.push_back(std::move(outputs));
  }
  out.points = reduce_members(out.member_outputs);
  return out;
}

// One member per seed, each trained on the full data set.
inline Ensemble multi_inits(nn::MlpSpec spec, std::span<const nn::Example> data,
                            const nn::TrainConfig& cfg, std::span<const std::uint64_t> seeds) {
  if (seeds.size() < 2) throw UsageError("Multi Inits needs at least 2 members");
  std::vector<std::uint64_t> sorted(seeds.begin(), seeds.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw UsageError("Multi Inits seeds must be distinct");
  }
  std::vector<nn::Regressor> members;
  for (std::size_t m = 0; m < seeds.size(); ++m) {
    spec.seed = seeds[m];
    members.push_back(detail::fit_member(spec, data, cfg, m));
  }
  return Ensemble(std::move(members));
}

// N draws with replacement, driven by `seed`.
inline nn::Dataset bootstrap_resample(std::span<const nn::Example> data, std::uint64_t seed) {
  nn::Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
  nn::Dataset out;
  out.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out.push_back(data[pick(rng)]);
  return out;
}

// Member m trains on a bootstrap resample; seeds[m] drives both the resample
// and the initialization.
inline Ensemble bagging(nn::MlpSpec spec, std::span<const nn::Example> data,
                        const nn::TrainConfig& cfg, std::span<const std::uint64_t> seeds) {
  if (seeds.size() < 2) throw UsageError("Bagging needs at least 2 members");
  if (data.empty()) throw Error("empty training set");
  std::vector<nn::Regressor> members;
  for (std::size_t m = 0; m < seeds.size(); ++m) {
    const auto resample = bootstrap_resample(data, nn::derive_seed(seeds[m], 0xB007));
    spec.seed = seeds[m];
    members.push_back(detail::fit_member(spec, resample, cfg, m));
  }
  return Ensemble(std::move(members));
}

// Snapshots of a single training run after each of its last `window` epochs.
inline Ensemble multi_epochs(const nn::MlpSpec& spec, std::span<const nn::Example> data,
                             const nn::TrainConfig& cfg, std::size_t window) {
  if (window < 2) throw UsageError("Multi Epochs needs a window of at least 2 epochs");
  if (window >= cfg.epochs) throw UsageError("Multi Epochs window must be shorter than training");
  std::deque<nn::Regressor> snapshots;
  const std::size_t first_kept = cfg.epochs - window + 1;
  nn::fit_regressor(spec, data, cfg, [&](std::size_t epoch, const nn::Regressor& snapshot) {
    if (epoch >= first_kept) snapshots.push_back(snapshot);
  });
  return Ensemble(std::vector<nn::Regressor>(snapshots.begin(), snapshots.end()));
}

// One member per architecture.
inline Ensemble multi_networks(std::span<const nn::MlpSpec> specs, std::span<const nn::Example> data,
                               const nn::TrainConfig& cfg) {
  if (specs.size() < 2) throw UsageError("Multi Networks needs at least 2 architectures");
  std::vector<nn::Regressor> members;
  for (std::size_t m = 0; m < specs.size(); ++m) {
    members.push_back(detail::fit_member(specs[m], data, cfg, m));
  }
  return Ensemble(std::move(members));
}

// Base network plus a second network regressing the base's absolute error.
class LearnedErrorModel {
 public:
  LearnedErrorModel(nn::Regressor base, nn::Regressor error_net)
      : base_(std::move(base)), error_net_(std::move(error_net)) {}

  [[nodiscard]] EnsemblePrediction predict(const Inputs& xs) const {
    EnsemblePrediction out;
    out.points.reserve(xs.size());
    for (const auto& x : xs) {
      out.points.push_back({base_.predict(x), std::max(0.0, error_net_.predict(x))});
    }
    return out;
  }

  [[nodiscard]] const nn::Regressor& base() const noexcept { return base_; }
  [[nodiscard]] const nn::Regressor& error_net() const noexcept { return error_net_; }

 private:
  nn::Regressor base_;
  nn::Regressor error_net_;
};

// Targets |base(x_i) - y_i| on the training inputs.
inline nn::Dataset error_targets(const nn::Regressor& base, std::span<const nn::Example> data) {
  nn::Dataset out;
  out.reserve(data.size());
  for (const auto& ex : data) out.push_back({ex.x, std::abs(base.predict(ex.x) - ex.y)});
  return out;
}

inline LearnedErrorModel learned_error(nn::Regressor base, const nn::MlpSpec& error_spec,
                                       std::span<const nn::Example> data,
                                       const nn::TrainConfig& cfg) {
  const auto targets = error_targets(base, data);
  try {
    auto error_net = nn::fit_regressor(error_spec, targets, cfg);
    return LearnedErrorModel(std::move(base), std::move(error_net));
  } catch (const TrainingDiverged& e) {
    throw TrainingDiverged(std::string("error network: ") + e.what());
  }
}

}  // namespace nmerci
