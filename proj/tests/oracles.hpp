#pragma once

// Independent reference computations used only by the tests. Nothing here
// calls into the library code paths it checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "nmerci/metric.hpp"
#include "nmerci/mlp.hpp"

namespace oracle {

// k-th order statistic after a full sort, k = ceil(alpha * n / 100) computed
// in integer arithmetic (alpha integral).
inline double percentile_full_sort(std::vector<double> values, int alpha) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  std::size_t k = (static_cast<std::size_t>(alpha) * n + 99) / 100;
  if (k == 0) k = 1;
  return values[k - 1];
}

inline double plain_mean(const std::vector<double>& v) {
  long double sum = 0;
  for (double x : v) sum += x;
  return static_cast<double>(sum / static_cast<long double>(v.size()));
}

// MeRCI as the literal sum (1/N) * sum_i lambda * sigma_i.
inline double merci_literal_sum(const nmerci::EvalSet& set, double lambda) {
  long double sum = 0;
  for (const auto& s : set) sum += static_cast<long double>(lambda) * s.sigma;
  return static_cast<double>(sum / static_cast<long double>(set.size()));
}

struct SetShape {
  std::size_t n;
  double error_scale;
};

// Random triplets with strictly positive errors.
inline nmerci::EvalSet random_set(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> y(-100.0, 100.0);
  std::lognormal_distribution<double> err(0.0, 1.0);
  std::lognormal_distribution<double> sig(0.0, 0.7);
  std::bernoulli_distribution sign(0.5);
  std::vector<nmerci::Sample> samples;
  for (std::size_t i = 0; i < n; ++i) {
    const double truth = y(rng);
    const double e = err(rng) + 1e-3;
    samples.push_back({truth + (sign(rng) ? e : -e), sig(rng), truth});
  }
  return nmerci::EvalSet(std::move(samples));
}

inline nmerci::EvalSet with_sigma(const nmerci::EvalSet& set, auto sigma_of) {
  std::vector<nmerci::Sample> out;
  for (const auto& s : set) out.push_back({s.y_hat, sigma_of(s), s.y_true});
  return nmerci::EvalSet(std::move(out));
}

inline nmerci::EvalSet oracle_sigma(const nmerci::EvalSet& set) {
  return with_sigma(set, [](const nmerci::Sample& s) { return std::abs(s.y_hat - s.y_true); });
}

inline nmerci::EvalSet constant_sigma(const nmerci::EvalSet& set, double c) {
  return with_sigma(set, [c](const nmerci::Sample&) { return c; });
}

inline nmerci::EvalSet scaled_sigma(const nmerci::EvalSet& set, double c) {
  return with_sigma(set, [c](const nmerci::Sample& s) { return c * s.sigma; });
}

// Samples whose ground truth lies in [low, high).
inline nmerci::EvalSet filter_truth(const nmerci::EvalSet& set, double low, double high) {
  std::vector<nmerci::Sample> out;
  for (const auto& s : set) {
    if (s.y_true >= low && s.y_true < high) out.push_back(s);
  }
  return nmerci::EvalSet(std::move(out));
}

inline double population_mean(const std::vector<double>& v) { return plain_mean(v); }

inline double population_std(const std::vector<double>& v) {
  const double m = plain_mean(v);
  long double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(static_cast<double>(ss / static_cast<long double>(v.size())));
}

// Central difference of the batch loss w.r.t. every flattened parameter.
inline std::vector<double> numeric_gradient(const nmerci::nn::Mlp& net, const nmerci::nn::Dataset& batch,
                                            const nmerci::nn::DropoutMasks* masks, double h) {
  nmerci::nn::Mlp probe = net;
  auto params = net.parameters();
  std::vector<double> out(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + h;
    probe.set_parameters(params);
    const double up = nmerci::nn::mse_loss(probe, batch, masks);
    params[i] = saved - h;
    probe.set_parameters(params);
    const double down = nmerci::nn::mse_loss(probe, batch, masks);
    params[i] = saved;
    out[i] = (up - down) / (2 * h);
  }
  return out;
}

inline std::vector<double> flatten(const nmerci::nn::Gradient& g) {
  std::vector<double> out;
  for (const auto& l : g.layers) {
    out.insert(out.end(), l.weights.begin(), l.weights.end());
    out.insert(out.end(), l.bias.begin(), l.bias.end());
  }
  return out;
}

inline nmerci::nn::Dataset random_batch(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
  std::normal_distribution<double> d(0.0, 1.0);
  nmerci::nn::Dataset batch;
  for (std::size_t i = 0; i < n; ++i) {
    nmerci::nn::Example ex{std::vector<double>(dim), d(rng)};
    for (double& v : ex.x) v = d(rng);
    batch.push_back(std::move(ex));
  }
  return batch;
}

}  // namespace oracle
