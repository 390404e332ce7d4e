#pragma once

// Small fully connected regression network: ReLU hidden layers, each followed
// by inverted dropout, and a linear scalar output. Trained with full-batch
// gradient descent on the mean squared error.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "nmerci/error.hpp"

namespace nmerci::nn {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
  return mix_seed(mix_seed(base) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

struct MlpSpec {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden_sizes{100};
  double dropout_p = 0.2;
  std::uint64_t seed = 0;

  void validate() const {
    if (input_dim == 0) throw UsageError("input_dim must be positive");
    if (hidden_sizes.empty()) throw UsageError("at least one hidden layer is required");
    for (std::size_t h : hidden_sizes) {
      if (h == 0) throw UsageError("hidden layer sizes must be positive");
    }
    if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw UsageError("dropout_p must lie in [0, 1)");
  }

  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

// Row-major `outputs x inputs` weight matrix plus bias.
struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  double& w(std::size_t out, std::size_t in) { return weights[out * inputs + in]; }
  [[nodiscard]] double w(std::size_t out, std::size_t in) const { return weights[out * inputs + in]; }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct Example {
  std::vector<double> x;
  double y = 0.0;
};

using Dataset = std::vector<Example>;

// Per-example multiplicative masks for every hidden layer: each entry is
// either 0 or 1/(1-p).
struct DropoutMasks {
  // [example][hidden layer][unit]
  std::vector<std::vector<std::vector<double>>> values;
};

struct Gradient {
  std::vector<DenseLayer> layers;
  double loss = 0.0;
};

namespace detail {

// z = W * input + b. The single-input case is common (1-D regression) and
// is kept as a contiguous loop so it vectorizes.
inline void affine(const DenseLayer& layer, const double* input, std::vector<double>& z) {
  z.resize(layer.outputs);
  const double* w = layer.weights.data();
  const double* b = layer.bias.data();
  if (layer.inputs == 1) {
    const double x0 = input[0];
    for (std::size_t o = 0; o < layer.outputs; ++o) z[o] = b[o] + w[o] * x0;
    return;
  }
  for (std::size_t o = 0; o < layer.outputs; ++o) {
    const double* row = w + o * layer.inputs;
    double acc = 0.0;
    for (std::size_t i = 0; i < layer.inputs; ++i) acc += row[i] * input[i];
    z[o] = b[o] + acc;
  }
}

}  // namespace detail

class Mlp {
 public:
  // Weights and biases are drawn from U(-r, r), r = sqrt(6 / (fan_in + fan_out)).
  explicit Mlp(MlpSpec spec) : spec_(std::move(spec)), rng_(spec_.seed) {
    spec_.validate();
    std::size_t in = spec_.input_dim;
    auto make_layer = [&](std::size_t out) {
      DenseLayer layer{in, out, std::vector<double>(in * out), std::vector<double>(out)};
      const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
      std::uniform_real_distribution<double> dist(-limit, limit);
      for (double& w : layer.weights) w = dist(rng_);
      for (double& b : layer.bias) b = dist(rng_);
      layers_.push_back(std::move(layer));
      in = out;
    };
    for (std::size_t h : spec_.hidden_sizes) make_layer(h);
    make_layer(1);
  }

  [[nodiscard]] const MlpSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] std::span<const DenseLayer> layers() const noexcept { return layers_; }
  [[nodiscard]] std::span<DenseLayer> layers() noexcept { return layers_; }
  [[nodiscard]] std::size_t hidden_layers() const noexcept { return layers_.size() - 1; }
  Rng& rng() noexcept { return rng_; }

  [[nodiscard]] std::size_t parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
    return n;
  }

  // Flattened as layer by layer, weights then bias.
  [[nodiscard]] std::vector<double> parameters() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for (const auto& l : layers_) {
      out.insert(out.end(), l.weights.begin(), l.weights.end());
      out.insert(out.end(), l.bias.begin(), l.bias.end());
    }
    return out;
  }

  void set_parameters(std::span<const double> values) {
    if (values.size() != parameter_count()) throw Error("parameter count mismatch");
    std::size_t i = 0;
    for (auto& l : layers_) {
      for (double& w : l.weights) w = values[i++];
      for (double& b : l.bias) b = values[i++];
    }
  }

  // Deterministic evaluation with dropout disabled.
  [[nodiscard]] double forward(std::span<const double> x) const { return run(x, nullptr, nullptr); }

  // Dropout active: units drop with probability p, survivors scale by 1/(1-p).
  [[nodiscard]] double forward_stochastic(std::span<const double> x, Rng& rng) const {
    return run(x, &rng, nullptr);
  }

  // Forward pass with explicit masks for one example.
  [[nodiscard]] double forward_masked(std::span<const double> x,
                                      const std::vector<std::vector<double>>& masks) const {
    return run(x, nullptr, &masks);
  }

  [[nodiscard]] DropoutMasks sample_masks(std::size_t batch, Rng& rng) const {
    DropoutMasks masks;
    fill_masks(batch, rng, masks);
    return masks;
  }

  void fill_masks(std::size_t batch, Rng& rng, DropoutMasks& masks) const {
    masks.values.resize(batch);
    const double keep_scale = 1.0 / (1.0 - spec_.dropout_p);
    const std::uint32_t threshold = drop_threshold();
    std::vector<std::uint32_t> draws;
    for (auto& per_example : masks.values) {
      per_example.resize(hidden_layers());
      for (std::size_t l = 0; l < hidden_layers(); ++l) {
        auto& m = per_example[l];
        m.resize(layers_[l].outputs);
        fill_uniform32(rng, m.size(), draws);
        for (std::size_t i = 0; i < m.size(); ++i) m[i] = draws[i] < threshold ? 0.0 : keep_scale;
      }
    }
  }

  friend bool operator==(const Mlp& a, const Mlp& b) {
    return a.spec_ == b.spec_ && a.layers_ == b.layers_ && a.rng_ == b.rng_;
  }

 private:
  // A unit drops when its 32-bit uniform falls below p * 2^32.
  [[nodiscard]] std::uint32_t drop_threshold() const {
    return static_cast<std::uint32_t>(std::ldexp(spec_.dropout_p, 32));
  }

  // Two 32-bit uniforms per 64-bit draw.
  static void fill_uniform32(Rng& rng, std::size_t n, std::vector<std::uint32_t>& out) {
    out.resize(n + 1);
    for (std::size_t i = 0; i < n; i += 2) {
      const std::uint64_t v = rng();
      out[i] = static_cast<std::uint32_t>(v);
      out[i + 1] = static_cast<std::uint32_t>(v >> 32);
    }
  }

  double run(std::span<const double> x, Rng* rng,
             const std::vector<std::vector<double>>* masks) const {
    if (x.size() != spec_.input_dim) {
      throw Error("input dimension mismatch: expected " + std::to_string(spec_.input_dim) +
                  ", got " + std::to_string(x.size()));
    }
    const double keep_scale = 1.0 / (1.0 - spec_.dropout_p);
    const bool sample = rng != nullptr && spec_.dropout_p > 0.0;
    const std::uint32_t threshold = drop_threshold();
    std::vector<std::uint32_t> draws;
    std::vector<double> in(x.begin(), x.end());
    std::vector<double> out;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const DenseLayer& layer = layers_[l];
      detail::affine(layer, in.data(), out);
      if (l + 1 < layers_.size()) {
        for (double& h : out) h = h > 0.0 ? h : 0.0;
        if (masks != nullptr) {
          for (std::size_t o = 0; o < layer.outputs; ++o) out[o] *= (*masks)[l][o];
        } else if (sample) {
          fill_uniform32(*rng, layer.outputs, draws);
          for (std::size_t o = 0; o < layer.outputs; ++o) {
            out[o] = draws[o] < threshold ? 0.0 : out[o] * keep_scale;
          }
        }
      }
      in.swap(out);
    }
    return in[0];
  }

  MlpSpec spec_;
  std::vector<DenseLayer> layers_;
  Rng rng_;
};

namespace detail {

// Reusable activations for one example.
struct Workspace {
  std::vector<std::vector<double>> pre;   // pre-activation per layer
  std::vector<std::vector<double>> post;  // layer outputs after ReLU and dropout
  std::vector<double> delta;
  std::vector<double> delta_prev;
};

inline Gradient zero_gradient(const Mlp& net) {
  Gradient g;
  for (const auto& l : net.layers()) {
    g.layers.push_back({l.inputs, l.outputs, std::vector<double>(l.weights.size(), 0.0),
                        std::vector<double>(l.bias.size(), 0.0)});
  }
  return g;
}

inline void clear(Gradient& g) {
  for (auto& l : g.layers) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  g.loss = 0.0;
}

// Adds the gradient of (f(x) - y)^2 * scale to `grad`; returns the squared error.
inline double accumulate(const Mlp& net, const Example& ex,
                         const std::vector<std::vector<double>>* masks, double scale,
                         Workspace& ws, Gradient& grad) {
  const auto layers = net.layers();
  const std::size_t depth = layers.size();
  ws.pre.resize(depth);
  ws.post.resize(depth);

  const double* input = ex.x.data();
  for (std::size_t l = 0; l < depth; ++l) {
    const DenseLayer& layer = layers[l];
    auto& z = ws.pre[l];
    auto& a = ws.post[l];
    affine(layer, input, z);
    a.resize(layer.outputs);
    if (l + 1 < depth) {
      if (masks != nullptr) {
        const double* m = (*masks)[l].data();
        for (std::size_t o = 0; o < layer.outputs; ++o) a[o] = (z[o] > 0.0 ? z[o] : 0.0) * m[o];
      } else {
        for (std::size_t o = 0; o < layer.outputs; ++o) a[o] = z[o] > 0.0 ? z[o] : 0.0;
      }
    } else {
      a[0] = z[0];
    }
    input = a.data();
  }

  const double residual = ws.post[depth - 1][0] - ex.y;
  ws.delta.assign(1, 2.0 * residual * scale);

  for (std::size_t l = depth; l-- > 0;) {
    const DenseLayer& layer = layers[l];
    DenseLayer& g = grad.layers[l];
    const double* prev = l == 0 ? ex.x.data() : ws.post[l - 1].data();
    const double* d = ws.delta.data();
    for (std::size_t o = 0; o < layer.outputs; ++o) g.bias[o] += d[o];
    if (layer.inputs == 1) {
      const double p0 = prev[0];
      for (std::size_t o = 0; o < layer.outputs; ++o) g.weights[o] += d[o] * p0;
    } else {
      for (std::size_t o = 0; o < layer.outputs; ++o) {
        double* grow = g.weights.data() + o * layer.inputs;
        const double dout = d[o];
        for (std::size_t i = 0; i < layer.inputs; ++i) grow[i] += dout * prev[i];
      }
    }
    if (l == 0) break;

    // Back through the dropout and ReLU that produced this layer's input.
    ws.delta_prev.assign(layer.inputs, 0.0);
    double* dp = ws.delta_prev.data();
    for (std::size_t o = 0; o < layer.outputs; ++o) {
      const double* row = layer.weights.data() + o * layer.inputs;
      const double dout = d[o];
      for (std::size_t i = 0; i < layer.inputs; ++i) dp[i] += dout * row[i];
    }
    const double* z = ws.pre[l - 1].data();
    if (masks != nullptr) {
      const double* m = (*masks)[l - 1].data();
      for (std::size_t i = 0; i < layer.inputs; ++i) dp[i] *= z[i] > 0.0 ? m[i] : 0.0;
    } else {
      for (std::size_t i = 0; i < layer.inputs; ++i) dp[i] = z[i] > 0.0 ? dp[i] : 0.0;
    }
    ws.delta.swap(ws.delta_prev);
  }
  return residual * residual;
}

inline void mse_gradient_into(const Mlp& net, std::span<const Example> batch,
                              const DropoutMasks* masks, Workspace& ws, Gradient& grad) {
  clear(grad);
  const double scale = 1.0 / static_cast<double>(batch.size());
  double sse = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].x.size() != net.spec().input_dim) throw Error("input dimension mismatch");
    sse += accumulate(net, batch[i], masks != nullptr ? &masks->values[i] : nullptr, scale, ws,
                      grad);
  }
  grad.loss = sse * scale;
}

}  // namespace detail

// Exact gradient of the mean squared error over `batch`. With masks, the
// network is differentiated under that fixed dropout pattern.
inline Gradient mse_gradient(const Mlp& net, std::span<const Example> batch,
                             const DropoutMasks* masks = nullptr) {
  if (batch.empty()) throw Error("empty batch");
  Gradient grad = detail::zero_gradient(net);
  detail::Workspace ws;
  detail::mse_gradient_into(net, batch, masks, ws, grad);
  return grad;
}

inline double mse_loss(const Mlp& net, std::span<const Example> batch,
                       const DropoutMasks* masks = nullptr) {
  if (batch.empty()) throw Error("empty batch");
  double sse = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double f = masks != nullptr ? net.forward_masked(batch[i].x, masks->values[i])
                                      : net.forward(batch[i].x);
    sse += (f - batch[i].y) * (f - batch[i].y);
  }
  return sse / static_cast<double>(batch.size());
}

struct TrainConfig {
  std::size_t epochs = 1000;
  double learning_rate = 1e-3;

  void validate() const {
    if (epochs == 0) throw UsageError("epochs must be at least 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
      throw UsageError("learning rate must be positive");
    }
  }
};

// Called after every epoch with the 1-based epoch number and the updated net.
using SnapshotHook = std::function<void(std::size_t epoch, const Mlp& net)>;

// Full-batch gradient descent. Dropout masks are drawn from the network's own
// generator, so the trajectory depends only on (spec.seed, cfg, data).
inline Mlp train(Mlp net, std::span<const Example> data, const TrainConfig& cfg,
                 const SnapshotHook& hook = {}) {
  cfg.validate();
  if (data.empty()) throw Error("empty training set");
  Gradient grad = detail::zero_gradient(net);
  detail::Workspace ws;
  DropoutMasks masks;
  const bool dropout = net.spec().dropout_p > 0.0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (dropout) net.fill_masks(data.size(), net.rng(), masks);
    detail::mse_gradient_into(net, data, dropout ? &masks : nullptr, ws, grad);
    if (!std::isfinite(grad.loss)) {
      throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch));
    }
    auto layers = net.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
      auto& p = layers[l];
      const auto& g = grad.layers[l];
      for (std::size_t i = 0; i < p.weights.size(); ++i) p.weights[i] -= cfg.learning_rate * g.weights[i];
      for (std::size_t i = 0; i < p.bias.size(); ++i) p.bias[i] -= cfg.learning_rate * g.bias[i];
    }
    if (hook) hook(epoch, net);
  }
  return net;
}

// ---------------------------------------------------------------------------
// Standardized regression wrapper

// z-score transform fitted on training data.
struct Standardizer {
  double mean = 0.0;
  double scale = 1.0;

  static Standardizer fit(std::span<const double> values) {
    Standardizer s;
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    const double sd = std::sqrt(ss / static_cast<double>(values.size()));
    s.scale = sd > 0.0 ? sd : 1.0;
    return s;
  }

  [[nodiscard]] double apply(double v) const noexcept { return (v - mean) / scale; }
  [[nodiscard]] double invert(double z) const noexcept { return z * scale + mean; }

  friend bool operator==(const Standardizer&, const Standardizer&) = default;
};

// A network trained on z-normalized inputs and targets; predictions are
// mapped back to target units.
class Regressor {
 public:
  Regressor(Mlp net, std::vector<Standardizer> x_norm, Standardizer y_norm)
      : net_(std::move(net)), x_norm_(std::move(x_norm)), y_norm_(y_norm) {}

  [[nodiscard]] double predict(std::span<const double> x) const {
    return y_norm_.invert(net_.forward(normalize(x)));
  }

  [[nodiscard]] double predict_stochastic(std::span<const double> x, Rng& rng) const {
    return y_norm_.invert(net_.forward_stochastic(normalize(x), rng));
  }

  [[nodiscard]] const Mlp& net() const noexcept { return net_; }
  [[nodiscard]] const std::vector<Standardizer>& x_norm() const noexcept { return x_norm_; }
  [[nodiscard]] const Standardizer& y_norm() const noexcept { return y_norm_; }

 private:
  [[nodiscard]] std::vector<double> normalize(std::span<const double> x) const {
    if (x.size() != x_norm_.size()) throw Error("input dimension mismatch");
    std::vector<double> z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = x_norm_[i].apply(x[i]);
    return z;
  }

  Mlp net_;
  std::vector<Standardizer> x_norm_;
  Standardizer y_norm_;
};

using RegressorHook = std::function<void(std::size_t epoch, const Regressor& snapshot)>;

inline Regressor fit_regressor(const MlpSpec& spec, std::span<const Example> data,
                               const TrainConfig& cfg, const RegressorHook& hook = {}) {
  if (data.empty()) throw Error("empty training set");
  std::vector<Standardizer> x_norm;
  for (std::size_t d = 0; d < spec.input_dim; ++d) {
    std::vector<double> column;
    for (const auto& ex : data) {
      if (ex.x.size() != spec.input_dim) throw Error("input dimension mismatch");
      column.push_back(ex.x[d]);
    }
    x_norm.push_back(Standardizer::fit(column));
  }
  std::vector<double> targets;
  for (const auto& ex : data) targets.push_back(ex.y);
  const Standardizer y_norm = Standardizer::fit(targets);

  Dataset normalized;
  normalized.reserve(data.size());
  for (const auto& ex : data) {
    Example z{std::vector<double>(ex.x.size()), y_norm.apply(ex.y)};
    for (std::size_t d = 0; d < ex.x.size(); ++d) z.x[d] = x_norm[d].apply(ex.x[d]);
    normalized.push_back(std::move(z));
  }

  SnapshotHook inner;
  if (hook) {
    inner = [&](std::size_t epoch, const Mlp& net) { hook(epoch, Regressor(net, x_norm, y_norm)); };
  }
  Mlp trained = train(Mlp(spec), normalized, cfg, inner);
  return Regressor(std::move(trained), std::move(x_norm), y_norm);
}

}  // namespace nmerci::nn
