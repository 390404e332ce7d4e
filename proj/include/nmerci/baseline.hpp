#pragma once

// Reference metrics commonly used to judge predictive uncertainty:
// sparsification curves, their area summary (AUSE) and Gaussian NLPD.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <vector>

#include "nmerci/error.hpp"
#include "nmerci/metric.hpp"

namespace nmerci {

struct SparsificationCurve {
  std::vector<double> fractions_removed;
  std::vector<double> mae_remaining;
  // Same curve when removing by true error instead of predicted sigma.
  std::vector<double> oracle_mae_remaining;
};

namespace detail {

// MAE of the samples left after dropping the `removed` first entries of
// `order` (a ranking from most to least suspicious).
inline double mae_after_removal(std::span<const double> errors, std::span<const std::size_t> order,
                                std::size_t removed) {
  std::vector<double> kept;
  kept.reserve(order.size() - removed);
  for (std::size_t i = removed; i < order.size(); ++i) kept.push_back(errors[order[i]]);
  return order_free_mean(std::move(kept));
}

template <typename Key>
std::vector<std::size_t> descending_order(std::size_t n, Key key) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Stable: among equal keys the earlier sample is removed first.
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return key(a) > key(b); });
  return order;
}

}  // namespace detail

// Evaluates the curve at fractions 0, 1/steps, ..., (steps-1)/steps; at
// fraction f the floor(f*N) samples with the largest sigma are dropped.
inline SparsificationCurve sparsification(const EvalSet& set, std::size_t steps) {
  if (steps < 2) throw UsageError("sparsification needs at least 2 steps");
  if (set.size() < steps) throw Error("evaluation set smaller than the number of steps");

  const auto errors = abs_errors(set);
  const auto by_sigma =
      detail::descending_order(set.size(), [&](std::size_t i) { return set[i].sigma; });
  const auto by_error =
      detail::descending_order(set.size(), [&](std::size_t i) { return errors[i]; });

  SparsificationCurve curve;
  const auto n = static_cast<double>(set.size());
  for (std::size_t j = 0; j < steps; ++j) {
    const double f = static_cast<double>(j) / static_cast<double>(steps);
    const auto removed = static_cast<std::size_t>(std::floor(f * n));
    curve.fractions_removed.push_back(f);
    curve.mae_remaining.push_back(detail::mae_after_removal(errors, by_sigma, removed));
    curve.oracle_mae_remaining.push_back(detail::mae_after_removal(errors, by_error, removed));
  }
  return curve;
}

// Area Under the Sparsification Error: trapezoidal integral over the removed
// fraction of (curve - oracle curve).
inline double ause(const SparsificationCurve& curve) {
  const auto& f = curve.fractions_removed;
  if (f.size() != curve.mae_remaining.size() || f.size() != curve.oracle_mae_remaining.size()) {
    throw Error("sparsification curve columns differ in length");
  }
  double area = 0.0;
  for (std::size_t i = 1; i < f.size(); ++i) {
    const double left = curve.mae_remaining[i - 1] - curve.oracle_mae_remaining[i - 1];
    const double right = curve.mae_remaining[i] - curve.oracle_mae_remaining[i];
    area += 0.5 * (left + right) * (f[i] - f[i - 1]);
  }
  return area;
}

// Average negative log density of the observations under N(y_hat, sigma^2).
inline double nlpd(const EvalSet& set) {
  detail::require_nonempty(set);
  const double half_log_two_pi = 0.5 * std::log(2.0 * std::numbers::pi);
  std::vector<double> terms;
  terms.reserve(set.size());
  for (const Sample& s : set) {
    if (s.sigma == 0.0) throw Error("NLPD undefined for zero variance");
    const double z = (s.y_hat - s.y_true) / s.sigma;
    terms.push_back(std::log(s.sigma) + half_log_two_pi + 0.5 * z * z);
  }
  return detail::order_free_mean(std::move(terms));
}

}  // namespace nmerci
