#pragma once

// One-dimensional cubic regression benchmark with injected outliers. Each
// method is trained for several independent runs on one shared training set;
// per-point predictions and uncertainties are averaged over runs and then
// scored against the noise-free cubic on a test grid.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "nmerci/ensemble.hpp"
#include "nmerci/error.hpp"
#include "nmerci/metric.hpp"
#include "nmerci/mlp.hpp"

namespace nmerci::toy {

enum class Method {
  multi_inits,
  bagging,
  mc_dropout,
  multi_epochs,
  multi_networks,
  learned_error,
  // Reference rows computed from the run-averaged prediction: sigma equal to
  // the true absolute error, or sigma = 1 everywhere.
  oracle,
  constant,
};

inline constexpr Method kAllMethods[] = {
    Method::multi_inits,    Method::bagging,       Method::mc_dropout, Method::multi_epochs,
    Method::multi_networks, Method::learned_error, Method::oracle,     Method::constant,
};

inline constexpr std::string_view short_name(Method m) {
  switch (m) {
    case Method::multi_inits: return "mi";
    case Method::bagging: return "bagging";
    case Method::mc_dropout: return "mcd";
    case Method::multi_epochs: return "me";
    case Method::multi_networks: return "mn";
    case Method::learned_error: return "le";
    case Method::oracle: return "oracle";
    case Method::constant: return "constant";
  }
  return "?";
}

inline constexpr std::string_view display_name(Method m) {
  switch (m) {
    case Method::multi_inits: return "Multi Inits";
    case Method::bagging: return "Bagging";
    case Method::mc_dropout: return "Monte Carlo Dropout";
    case Method::multi_epochs: return "Multi Epochs";
    case Method::multi_networks: return "Multi Networks";
    case Method::learned_error: return "Learned Error";
    case Method::oracle: return "Oracle";
    case Method::constant: return "Constant";
  }
  return "?";
}

inline Method parse_method(std::string_view name) {
  for (Method m : kAllMethods) {
    if (short_name(m) == name) return m;
  }
  std::string valid;
  for (Method m : kAllMethods) {
    if (!valid.empty()) valid += ", ";
    valid += short_name(m);
  }
  throw UsageError("unknown method '" + std::string(name) + "'; valid names: " + valid);
}

inline std::vector<double> default_alphas() {
  std::vector<double> alphas;
  for (int a = 5; a <= 100; a += 5) alphas.push_back(a);
  return alphas;
}

struct ToyConfig {
  std::size_t n_train = 20;
  double x_low = -4.0;
  double x_high = 4.0;
  double noise_std = 3.0;
  double outlier_low = -2.3;
  double outlier_high = -1.3;
  double outlier_bias = 20.0;
  // When set, exactly this many training inputs are drawn inside the outlier
  // interval and the rest outside it; otherwise all inputs are uniform.
  std::optional<std::size_t> pinned_outliers = 3;

  std::size_t n_runs = 20;
  std::size_t test_points = 200;
  double test_low = -6.0;
  double test_high = 6.0;
  std::uint64_t master_seed = 0;

  nn::MlpSpec net{1, {100}, 0.2, 0};
  nn::TrainConfig train{250, 0.2};
  std::size_t mcd_passes = 50;
  std::size_t members = 20;
  std::size_t epoch_window = 20;
  std::vector<std::vector<std::size_t>> architectures{{50}, {100}, {200}, {100, 100}};
  std::vector<double> alphas = default_alphas();

  void validate() const {
    if (n_train < 2) throw UsageError("n_train must be at least 2");
    if (!(x_low < x_high)) throw UsageError("x_low must be below x_high");
    if (!(outlier_low <= outlier_high) || outlier_low < x_low || outlier_high > x_high) {
      throw UsageError("outlier interval must lie inside the input range");
    }
    if (!(noise_std >= 0.0)) throw UsageError("noise_std must be non-negative");
    if (pinned_outliers && *pinned_outliers > n_train) {
      throw UsageError("more pinned outliers than training points");
    }
    if (n_runs == 0) throw UsageError("n_runs must be at least 1");
    if (test_points < 2 || !(test_low < test_high)) throw UsageError("invalid test grid");
    net.validate();
    train.validate();
    for (double a : alphas) MetricConfig{a, false}.validate();
  }
};

struct ToyData {
  nn::Dataset train;
  std::vector<double> test_x;
  std::vector<double> test_y;
  std::size_t outlier_count = 0;
};

inline double cubic(double x) { return x * x * x; }

inline bool in_outlier_interval(const ToyConfig& cfg, double x) {
  return x >= cfg.outlier_low && x <= cfg.outlier_high;
}

inline ToyData generate_toy(const ToyConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  nn::Rng rng(seed);
  std::uniform_real_distribution<double> uniform(cfg.x_low, cfg.x_high);
  std::normal_distribution<double> noise(0.0, cfg.noise_std > 0.0 ? cfg.noise_std : 1.0);

  std::vector<double> xs;
  if (cfg.pinned_outliers) {
    std::uniform_real_distribution<double> inside(cfg.outlier_low, cfg.outlier_high);
    for (std::size_t i = 0; i < *cfg.pinned_outliers; ++i) xs.push_back(inside(rng));
    while (xs.size() < cfg.n_train) {
      const double x = uniform(rng);
      if (!in_outlier_interval(cfg, x)) xs.push_back(x);
    }
  } else {
    for (std::size_t i = 0; i < cfg.n_train; ++i) xs.push_back(uniform(rng));
  }
  std::sort(xs.begin(), xs.end());

  ToyData data;
  for (double x : xs) {
    double y = cubic(x);
    if (cfg.noise_std > 0.0) y += noise(rng);
    if (in_outlier_interval(cfg, x)) {
      y += cfg.outlier_bias;
      ++data.outlier_count;
    }
    data.train.push_back({{x}, y});
  }
  const double step = (cfg.test_high - cfg.test_low) / static_cast<double>(cfg.test_points - 1);
  for (std::size_t i = 0; i < cfg.test_points; ++i) {
    const double x = i + 1 == cfg.test_points ? cfg.test_high : cfg.test_low + step * static_cast<double>(i);
    data.test_x.push_back(x);
    data.test_y.push_back(cubic(x));
  }
  return data;
}

struct RunResult {
  Method method = Method::multi_inits;
  std::vector<double> test_x;
  // Run-averaged prediction and uncertainty against the noise-free target.
  EvalSet samples;
  // [run][point], before averaging.
  std::vector<std::vector<UncertainPrediction>> per_run;
  // Literal (untrimmed) n-MeRCI per alpha.
  std::map<double, MetricReport> n_merci_by_alpha;
  // z-score statistics of the shared training set.
  nn::Standardizer x_stats;
  nn::Standardizer y_stats;
};

// Seeds for (method, run); reference methods share the plain-network stream.
inline std::uint64_t run_seed(std::uint64_t master, Method m, std::size_t run) {
  const auto stream = (m == Method::oracle || m == Method::constant)
                          ? std::uint64_t{0xC0FFEE}
                          : static_cast<std::uint64_t>(m) + 1;
  return nn::derive_seed(nn::derive_seed(master, stream), run);
}

inline std::uint64_t data_seed(std::uint64_t master) { return nn::derive_seed(master, 0xDA7A); }

namespace detail {

inline std::vector<std::uint64_t> member_seeds(std::uint64_t seed, std::size_t count) {
  std::vector<std::uint64_t> seeds;
  for (std::size_t m = 0; m < count; ++m) seeds.push_back(nn::derive_seed(seed, m));
  return seeds;
}

// One train/evaluate cycle of a method.
inline std::vector<UncertainPrediction> run_once(const ToyConfig& cfg, Method method,
                                                 const ToyData& data, std::uint64_t seed) {
  Inputs xs;
  for (double x : data.test_x) xs.push_back({x});
  nn::MlpSpec spec = cfg.net;
  spec.seed = seed;

  switch (method) {
    case Method::multi_inits:
      return multi_inits(spec, data.train, cfg.train, member_seeds(seed, cfg.members)).predict(xs).points;
    case Method::bagging:
      return bagging(spec, data.train, cfg.train, member_seeds(seed, cfg.members)).predict(xs).points;
    case Method::mc_dropout: {
      const auto model = nn::fit_regressor(spec, data.train, cfg.train);
      return mc_dropout(model, xs, cfg.mcd_passes, nn::derive_seed(seed, 0x3CD)).points;
    }
    case Method::multi_epochs:
      return multi_epochs(spec, data.train, cfg.train, cfg.epoch_window).predict(xs).points;
    case Method::multi_networks: {
      std::vector<nn::MlpSpec> specs;
      for (std::size_t a = 0; a < cfg.architectures.size(); ++a) {
        nn::MlpSpec s = spec;
        s.hidden_sizes = cfg.architectures[a];
        s.seed = nn::derive_seed(seed, a);
        specs.push_back(std::move(s));
      }
      return multi_networks(specs, data.train, cfg.train).predict(xs).points;
    }
    case Method::learned_error: {
      auto base = nn::fit_regressor(spec, data.train, cfg.train);
      nn::MlpSpec error_spec = spec;
      error_spec.seed = nn::derive_seed(seed, 0xE44);
      return learned_error(std::move(base), error_spec, data.train, cfg.train).predict(xs).points;
    }
    case Method::oracle:
    case Method::constant: {
      const auto model = nn::fit_regressor(spec, data.train, cfg.train);
      std::vector<UncertainPrediction> out;
      for (const auto& x : xs) out.push_back({model.predict(x), 0.0});
      return out;
    }
  }
  return {};
}

// Runs fn(i) for i in [0, count) on up to hardware_concurrency threads.
// The first exception by index is rethrown.
template <typename Fn>
void parallel_for(std::size_t count, Fn fn) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads =
      std::min<std::size_t>(count, std::max(1u, std::thread::hardware_concurrency()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace detail

// Scores one method's run-averaged samples at every alpha of the config.
inline std::map<double, MetricReport> score_alphas(const EvalSet& samples,
                                                   const std::vector<double>& alphas) {
  std::map<double, MetricReport> out;
  for (double a : alphas) out[a] = n_merci(samples, {a, false});
  return out;
}

inline std::vector<RunResult> run_methods(const ToyConfig& cfg, std::span<const Method> methods) {
  cfg.validate();
  if (methods.empty()) throw UsageError("at least one method is required");
  const ToyData data = generate_toy(cfg, data_seed(cfg.master_seed));

  const std::size_t runs = cfg.n_runs;
  std::vector<std::vector<UncertainPrediction>> outputs(methods.size() * runs);
  detail::parallel_for(outputs.size(), [&](std::size_t job) {
    const Method m = methods[job / runs];
    const std::size_t run = job % runs;
    try {
      outputs[job] = detail::run_once(cfg, m, data, run_seed(cfg.master_seed, m, run));
    } catch (const TrainingDiverged& e) {
      throw TrainingDiverged(std::string(short_name(m)) + " run " + std::to_string(run) + ": " +
                             e.what());
    }
  });

  std::vector<double> train_x;
  std::vector<double> train_y;
  for (const auto& ex : data.train) {
    train_x.push_back(ex.x[0]);
    train_y.push_back(ex.y);
  }

  std::vector<RunResult> results;
  for (std::size_t k = 0; k < methods.size(); ++k) {
    RunResult r;
    r.method = methods[k];
    r.test_x = data.test_x;
    r.x_stats = nn::Standardizer::fit(train_x);
    r.y_stats = nn::Standardizer::fit(train_y);
    r.per_run.assign(outputs.begin() + static_cast<std::ptrdiff_t>(k * runs),
                     outputs.begin() + static_cast<std::ptrdiff_t>((k + 1) * runs));

    std::vector<Sample> samples;
    for (std::size_t j = 0; j < data.test_x.size(); ++j) {
      double y_hat = 0.0;
      double sigma = 0.0;
      for (const auto& run : r.per_run) {
        y_hat += run[j].y_hat;
        sigma += run[j].sigma;
      }
      y_hat /= static_cast<double>(runs);
      sigma /= static_cast<double>(runs);
      if (r.method == Method::oracle) sigma = std::abs(y_hat - data.test_y[j]);
      if (r.method == Method::constant) sigma = 1.0;
      samples.push_back({y_hat, sigma, data.test_y[j]});
    }
    r.samples = EvalSet(std::move(samples));
    r.n_merci_by_alpha = score_alphas(r.samples, cfg.alphas);
    results.push_back(std::move(r));
  }
  return results;
}

struct SweepCell {
  Method method = Method::multi_inits;
  double alpha = 0.0;
  MetricReport report;
};

// method x alpha table of literal n-MeRCI; degenerate cells keep their flag.
inline std::vector<SweepCell> alpha_sweep(std::span<const RunResult> results,
                                          std::span<const double> alphas) {
  for (double a : alphas) MetricConfig{a, false}.validate();
  std::vector<SweepCell> table;
  for (const auto& r : results) {
    for (double a : alphas) table.push_back({r.method, a, n_merci(r.samples, {a, false})});
  }
  return table;
}

}  // namespace nmerci::toy
