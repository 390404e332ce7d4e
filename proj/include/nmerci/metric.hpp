#pragma once

// Normalized Mean Rescaled Confidence Interval (n-MeRCI) and the pieces it
// is built from: absolute errors, MAE, nearest-rank percentiles and the
// per-sample error/uncertainty ratios.
//
// All functions are pure and take their inputs by const reference, so they
// can be called concurrently from any number of threads.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nmerci/error.hpp"

namespace nmerci {

// One evaluation triplet: a prediction, its predicted uncertainty (a
// standard-deviation-like spread in target units) and the observed value.
struct Sample {
  double y_hat = 0.0;
  double sigma = 0.0;
  double y_true = 0.0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

// Ordered, validated collection of samples. Every sample is finite and has
// sigma >= 0; construction throws otherwise.
class EvalSet {
 public:
  EvalSet() = default;

  explicit EvalSet(std::vector<Sample> samples) : samples_(std::move(samples)) {
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      const Sample& s = samples_[i];
      if (!std::isfinite(s.y_hat) || !std::isfinite(s.sigma) || !std::isfinite(s.y_true)) {
        throw Error("non-finite value in sample " + std::to_string(i));
      }
      if (s.sigma < 0.0) {
        throw Error("invalid uncertainty: negative sigma in sample " + std::to_string(i));
      }
    }
  }

  static EvalSet from_columns(std::span<const double> y_hat, std::span<const double> sigma,
                              std::span<const double> y_true) {
    if (y_hat.size() != sigma.size() || y_hat.size() != y_true.size()) {
      throw Error("column length mismatch");
    }
    std::vector<Sample> samples(y_hat.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      samples[i] = {y_hat[i], sigma[i], y_true[i]};
    }
    return EvalSet(std::move(samples));
  }

  [[nodiscard]] std::size_t size() const noexcept { return samples_.size(); }
  [[nodiscard]] bool empty() const noexcept { return samples_.empty(); }
  [[nodiscard]] const Sample& operator[](std::size_t i) const { return samples_[i]; }
  [[nodiscard]] std::span<const Sample> samples() const noexcept { return samples_; }
  [[nodiscard]] auto begin() const noexcept { return samples_.begin(); }
  [[nodiscard]] auto end() const noexcept { return samples_.end(); }

  friend bool operator==(const EvalSet&, const EvalSet&) = default;

 private:
  std::vector<Sample> samples_;
};

struct MetricConfig {
  // Inlier percentile in (0, 100].
  double alpha = 95.0;
  // When set, the MAE in the normalization uses only errors within the
  // alpha-percentile of errors. Equivalent to the plain MAE at alpha = 100.
  bool trim_mae = true;

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 100.0)) {
      throw UsageError("alpha must lie in (0, 100], got " + std::to_string(alpha));
    }
  }
};

struct MetricReport {
  std::size_t n = 0;
  // MAE used by the normalization: trimmed or full depending on the config.
  double mae = 0.0;
  // Global rescaling factor; +infinity when too many zero-sigma samples
  // carry a nonzero error.
  double lambda_alpha = 0.0;
  double merci = 0.0;
  double max_alpha_error = 0.0;
  // Absent exactly when `degenerate` is set.
  std::optional<double> n_merci;
  // Number of samples contributing to `mae`.
  std::size_t n_used = 0;
  bool degenerate = false;

  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

namespace detail {

inline void require_nonempty(const EvalSet& set) {
  if (set.empty()) throw Error("empty evaluation set");
}

// Mean computed over the sorted values, so the result does not depend on
// the input order.
inline double order_free_mean(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

}  // namespace detail

inline std::vector<double> abs_errors(const EvalSet& set) {
  detail::require_nonempty(set);
  std::vector<double> errors;
  errors.reserve(set.size());
  for (const Sample& s : set) errors.push_back(std::abs(s.y_hat - s.y_true));
  return errors;
}

inline double mae(const EvalSet& set) { return detail::order_free_mean(abs_errors(set)); }

inline double mean_sigma(const EvalSet& set) {
  detail::require_nonempty(set);
  std::vector<double> sigmas;
  sigmas.reserve(set.size());
  for (const Sample& s : set) sigmas.push_back(s.sigma);
  return detail::order_free_mean(std::move(sigmas));
}

// 1-based rank k = ceil(alpha * n / 100), clamped to [1, n]. Products that
// land within rounding noise of an integer count as that integer, so that
// e.g. alpha = 85 with n = 20 selects the 17th element.
inline std::size_t nearest_rank(std::size_t n, double alpha) {
  const double exact = alpha * static_cast<double>(n) / 100.0;
  const double rounded = std::round(exact);
  const double rank =
      std::abs(exact - rounded) <= 1e-9 * std::max(1.0, exact) ? rounded : std::ceil(exact);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(rank, 1.0)), 1, n);
}

// k-th smallest value with k = nearest_rank(n, alpha). +infinity entries
// sort last.
inline double percentile_nearest_rank(std::span<const double> values, double alpha) {
  if (values.empty()) throw Error("percentile of empty sequence");
  MetricConfig{alpha, false}.validate();
  std::vector<double> scratch(values.begin(), values.end());
  const std::size_t k = nearest_rank(scratch.size(), alpha);
  auto nth = scratch.begin() + static_cast<std::ptrdiff_t>(k - 1);
  std::nth_element(scratch.begin(), nth, scratch.end());
  return *nth;
}

// error_i / sigma_i, with 0/0 -> 0 and e/0 -> +infinity for e > 0.
inline std::vector<double> lambda_ratios(const EvalSet& set) {
  detail::require_nonempty(set);
  std::vector<double> ratios;
  ratios.reserve(set.size());
  for (const Sample& s : set) {
    const double err = std::abs(s.y_hat - s.y_true);
    if (s.sigma > 0.0) {
      ratios.push_back(err / s.sigma);
    } else {
      ratios.push_back(err == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    }
  }
  return ratios;
}

struct MerciResult {
  double lambda_alpha = 0.0;
  // +infinity when lambda_alpha is.
  double merci = 0.0;

  [[nodiscard]] bool degenerate() const noexcept { return std::isinf(lambda_alpha); }
};

// MeRCI^alpha: the alpha-percentile of the ratios, times the mean sigma over
// all samples.
inline MerciResult merci(const EvalSet& set, const MetricConfig& cfg) {
  cfg.validate();
  const auto ratios = lambda_ratios(set);
  const double lambda = percentile_nearest_rank(ratios, cfg.alpha);
  if (std::isinf(lambda)) return {lambda, lambda};
  return {lambda, lambda * mean_sigma(set)};
}

inline MetricReport n_merci(const EvalSet& set, const MetricConfig& cfg) {
  cfg.validate();
  const auto errors = abs_errors(set);
  const MerciResult m = merci(set, cfg);

  MetricReport report;
  report.n = set.size();
  report.lambda_alpha = m.lambda_alpha;
  report.merci = m.merci;
  report.max_alpha_error = percentile_nearest_rank(errors, cfg.alpha);

  if (cfg.trim_mae) {
    std::vector<double> inliers;
    inliers.reserve(errors.size());
    for (double e : errors) {
      if (e <= report.max_alpha_error) inliers.push_back(e);
    }
    report.n_used = inliers.size();
    report.mae = detail::order_free_mean(std::move(inliers));
  } else {
    report.n_used = errors.size();
    report.mae = detail::order_free_mean(errors);
  }

  const double denominator = report.max_alpha_error - report.mae;
  // Constant errors make the two bounds coincide; the mean of identical
  // values may still be off by a few ulps.
  const double scale = std::max(std::abs(report.max_alpha_error), std::abs(report.mae));
  const bool flat = std::abs(denominator) <= 64.0 * std::numeric_limits<double>::epsilon() * scale;
  if (m.degenerate() || flat) {
    report.degenerate = true;
  } else {
    // Adding +0.0 turns a -0.0 (oracle over a negative denominator) into 0.
    report.n_merci = (report.merci - report.mae) / denominator + 0.0;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Binned evaluation

struct Bin {
  double low = 0.0;
  double high = 0.0;
  std::size_t n = 0;
  // Absent for bins with fewer than two samples.
  std::optional<MetricReport> report;

  [[nodiscard]] bool skipped() const noexcept { return !report.has_value(); }
};

struct BinnedReport {
  std::vector<Bin> bins;
  // Mean n-MeRCI over bins that were scored and not degenerate.
  std::optional<double> average_n_merci;
};

// Index of the half-open bin [k*w, (k+1)*w) holding y.
inline long long bin_index(double y, double width) {
  return static_cast<long long>(std::floor(y / width));
}

// Partitions samples by ground truth into bins of the given width anchored
// at zero and scores each bin independently.
inline BinnedReport binned_eval(const EvalSet& set, const MetricConfig& cfg, double bin_width) {
  cfg.validate();
  if (!(bin_width > 0.0) || !std::isfinite(bin_width)) {
    throw UsageError("bin width must be positive");
  }
  std::map<long long, std::vector<Sample>> groups;
  for (const Sample& s : set) groups[bin_index(s.y_true, bin_width)].push_back(s);

  BinnedReport out;
  double sum = 0.0;
  std::size_t scored = 0;
  for (auto& [k, members] : groups) {
    Bin bin;
    bin.low = static_cast<double>(k) * bin_width;
    bin.high = static_cast<double>(k + 1) * bin_width;
    bin.n = members.size();
    if (members.size() >= 2) {
      bin.report = n_merci(EvalSet(std::move(members)), cfg);
      if (bin.report->n_merci) {
        sum += *bin.report->n_merci;
        ++scored;
      }
    }
    out.bins.push_back(std::move(bin));
  }
  if (scored > 0) out.average_n_merci = sum / static_cast<double>(scored);
  return out;
}

}  // namespace nmerci
