#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "costacq/error.hpp"
#include "costacq/rng.hpp"

namespace costacq::nn {

enum class Activation { relu, sigmoid, softmax, identity };

// train: dropout active, cache kept. eval: plain pass. stochastic_eval: dropout
// active at inference time (MC dropout).
enum class Mode { train, eval, stochastic_eval };

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::softmax: return "softmax";
    case Activation::identity: return "identity";
  }
  return "identity";
}

inline Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "softmax") return Activation::softmax;
  if (s == "identity") return Activation::identity;
  fail(ErrorCode::parse_error, "unknown activation '" + s + "'");
}

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weight;  // out x in, row-major
  std::vector<double> bias;
  Activation activation = Activation::identity;
  double dropout = 0.0;  // inverted dropout on this layer's output

  double w(std::size_t o, std::size_t i) const { return weight[o * in + i]; }
};

struct LayerSpec {
  std::size_t width;
  Activation activation;
  double dropout = 0.0;
};

class DenseNet {
 public:
  DenseNet() = default;

  DenseNet(std::size_t input_width, std::vector<DenseLayer> layers)
      : input_width_(input_width), layers_(std::move(layers)) {
    validate();
  }

  // Glorot-uniform weights, zero biases.
  static DenseNet build(std::size_t input_width, const std::vector<LayerSpec>& specs, Rng& rng) {
    std::vector<DenseLayer> layers;
    std::size_t in = input_width;
    for (const auto& spec : specs) {
      DenseLayer layer;
      layer.in = in;
      layer.out = spec.width;
      layer.activation = spec.activation;
      layer.dropout = spec.dropout;
      const double limit = std::sqrt(6.0 / static_cast<double>(in + spec.width));
      layer.weight.resize(in * spec.width);
      for (auto& v : layer.weight) v = rng.uniform(-limit, limit);
      layer.bias.assign(spec.width, 0.0);
      layers.push_back(std::move(layer));
      in = spec.width;
    }
    return DenseNet(input_width, std::move(layers));
  }

  // Hidden relu layers followed by the given head.
  static DenseNet mlp(std::size_t input_width, const std::vector<std::size_t>& hidden, std::size_t outputs,
                      Activation head, double dropout, Rng& rng) {
    std::vector<LayerSpec> specs;
    for (auto h : hidden) specs.push_back({h, Activation::relu, dropout});
    specs.push_back({outputs, head, 0.0});
    return build(input_width, specs, rng);
  }

  std::size_t input_width() const { return input_width_; }
  std::size_t output_width() const { return layers_.empty() ? input_width_ : layers_.back().out; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  Activation head() const { return layers_.back().activation; }

  bool has_dropout() const {
    return std::any_of(layers_.begin(), layers_.end(), [](const auto& l) { return l.dropout > 0.0; });
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
    return n;
  }

  friend bool operator==(const DenseNet& a, const DenseNet& b) {
    if (a.input_width_ != b.input_width_ || a.layers_.size() != b.layers_.size()) return false;
    for (std::size_t i = 0; i < a.layers_.size(); ++i) {
      const auto &x = a.layers_[i], &y = b.layers_[i];
      if (x.in != y.in || x.out != y.out || x.weight != y.weight || x.bias != y.bias ||
          x.activation != y.activation || x.dropout != y.dropout) {
        return false;
      }
    }
    return true;
  }

 private:
  void validate() const {
    if (input_width_ == 0 || layers_.empty()) fail(ErrorCode::invalid_network, "network needs input and layers");
    std::size_t in = input_width_;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto& l = layers_[i];
      const bool last = i + 1 == layers_.size();
      if (l.in != in) fail(ErrorCode::invalid_network, "layer " + std::to_string(i) + " input width mismatch");
      if (l.out == 0) fail(ErrorCode::invalid_network, "layer " + std::to_string(i) + " has zero width");
      if (l.weight.size() != l.in * l.out || l.bias.size() != l.out) {
        fail(ErrorCode::invalid_network, "layer " + std::to_string(i) + " parameter shape");
      }
      if (!(l.dropout >= 0.0 && l.dropout < 1.0)) fail(ErrorCode::invalid_network, "dropout outside [0,1)");
      if (l.activation == Activation::softmax && !last) {
        fail(ErrorCode::invalid_network, "softmax is only allowed on the output layer");
      }
      if (last && l.dropout != 0.0) fail(ErrorCode::invalid_network, "output layer cannot use dropout");
      in = l.out;
    }
  }

  std::size_t input_width_ = 0;
  std::vector<DenseLayer> layers_;
};

struct ForwardCache {
  // activations[0] is the input; activations[i + 1] is layer i's output after dropout.
  std::vector<std::vector<double>> activations;
  // Layer outputs before dropout, needed for activation derivatives.
  std::vector<std::vector<double>> outputs;
  // Per-layer dropout multipliers (0 or 1/(1-p)); empty when dropout was inactive.
  std::vector<std::vector<double>> dropout_masks;
};

struct ForwardResult {
  std::vector<double> output;
  ForwardCache cache;
};

namespace detail {

inline void activate(Activation a, std::vector<double>& z) {
  switch (a) {
    case Activation::relu:
      for (auto& v : z) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::sigmoid:
      for (auto& v : z) v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
      break;
    case Activation::softmax: {
      const double top = *std::max_element(z.begin(), z.end());
      double sum = 0.0;
      for (auto& v : z) sum += (v = std::exp(v - top));
      for (auto& v : z) v /= sum;
      break;
    }
    case Activation::identity: break;
  }
}

}  // namespace detail

inline ForwardResult forward(const DenseNet& net, std::span<const double> input, Mode mode, Rng& rng) {
  if (input.size() != net.input_width()) {
    fail(ErrorCode::dimension_mismatch,
         "input width " + std::to_string(input.size()) + " != " + std::to_string(net.input_width()));
  }
  for (double v : input) {
    if (!std::isfinite(v)) fail(ErrorCode::non_finite_input, "network input contains a non-finite value");
  }
  const bool dropout_on = mode != Mode::eval;
  ForwardResult result;
  auto& cache = result.cache;
  cache.activations.emplace_back(input.begin(), input.end());
  for (const auto& layer : net.layers()) {
    const auto& x = cache.activations.back();
    std::vector<double> z(layer.bias);
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double* row = &layer.weight[o * layer.in];
      double acc = 0.0;
      for (std::size_t i = 0; i < layer.in; ++i) acc += row[i] * x[i];
      z[o] += acc;
    }
    detail::activate(layer.activation, z);
    cache.outputs.push_back(z);
    std::vector<double> mask;
    if (dropout_on && layer.dropout > 0.0) {
      const double keep = 1.0 - layer.dropout;
      mask.resize(layer.out);
      for (std::size_t o = 0; o < layer.out; ++o) {
        mask[o] = rng.uniform() < keep ? 1.0 / keep : 0.0;
        z[o] *= mask[o];
      }
    }
    cache.dropout_masks.push_back(std::move(mask));
    cache.activations.push_back(std::move(z));
  }
  result.output = cache.activations.back();
  return result;
}

inline ForwardResult forward(const DenseNet& net, std::span<const double> input, Mode mode,
                             std::uint64_t seed) {
  Rng rng(seed);
  return forward(net, input, mode, rng);
}

inline std::vector<double> predict(const DenseNet& net, std::span<const double> input) {
  Rng unused(0);
  return forward(net, input, Mode::eval, unused).output;
}

struct LayerGradient {
  std::vector<double> weight;
  std::vector<double> bias;
};

struct Gradients {
  std::vector<LayerGradient> layers;
  std::vector<double> input;

  static Gradients zeros_like(const DenseNet& net) {
    Gradients g;
    for (const auto& l : net.layers()) {
      g.layers.push_back({std::vector<double>(l.weight.size(), 0.0), std::vector<double>(l.bias.size(), 0.0)});
    }
    g.input.assign(net.input_width(), 0.0);
    return g;
  }

  void add(const Gradients& other, double scale = 1.0) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      for (std::size_t k = 0; k < layers[i].weight.size(); ++k) layers[i].weight[k] += scale * other.layers[i].weight[k];
      for (std::size_t k = 0; k < layers[i].bias.size(); ++k) layers[i].bias[k] += scale * other.layers[i].bias[k];
    }
    for (std::size_t k = 0; k < input.size(); ++k) input[k] += scale * other.input[k];
  }
};

// What the supplied loss gradient is taken with respect to: the network output,
// or the output layer's pre-activation (softmax/sigmoid logits).
enum class GradientAt { output, logits };

inline Gradients backward(const DenseNet& net, const ForwardCache& cache, std::span<const double> grad,
                          GradientAt at = GradientAt::output) {
  const auto& layers = net.layers();
  if (cache.activations.size() != layers.size() + 1 || cache.outputs.size() != layers.size() ||
      cache.activations.front().size() != net.input_width()) {
    fail(ErrorCode::stale_cache, "cache does not match network shape");
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (cache.outputs[i].size() != layers[i].out) fail(ErrorCode::stale_cache, "cache layer width");
  }
  if (grad.size() != net.output_width()) fail(ErrorCode::dimension_mismatch, "output gradient width");

  Gradients g;
  g.layers.resize(layers.size());
  std::vector<double> delta(grad.begin(), grad.end());
  for (std::size_t li = layers.size(); li-- > 0;) {
    const auto& layer = layers[li];
    const auto& y = cache.outputs[li];
    const auto& mask = cache.dropout_masks[li];
    if (!mask.empty()) {
      for (std::size_t o = 0; o < layer.out; ++o) delta[o] *= mask[o];
    }
    const bool at_logits = at == GradientAt::logits && li + 1 == layers.size();
    if (!at_logits) {
      switch (layer.activation) {
        case Activation::relu:
          for (std::size_t o = 0; o < layer.out; ++o) delta[o] = y[o] > 0.0 ? delta[o] : 0.0;
          break;
        case Activation::sigmoid:
          for (std::size_t o = 0; o < layer.out; ++o) delta[o] *= y[o] * (1.0 - y[o]);
          break;
        case Activation::softmax: {
          double dot = 0.0;
          for (std::size_t o = 0; o < layer.out; ++o) dot += y[o] * delta[o];
          for (std::size_t o = 0; o < layer.out; ++o) delta[o] = y[o] * (delta[o] - dot);
          break;
        }
        case Activation::identity: break;
      }
    }
    const auto& x = cache.activations[li];
    auto& lg = g.layers[li];
    lg.weight.assign(layer.weight.size(), 0.0);
    lg.bias = delta;
    std::vector<double> prev(layer.in, 0.0);
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      double* gw = &lg.weight[o * layer.in];
      const double* w = &layer.weight[o * layer.in];
      for (std::size_t i = 0; i < layer.in; ++i) {
        gw[i] = d * x[i];
        prev[i] += w[i] * d;
      }
    }
    delta = std::move(prev);
  }
  g.input = std::move(delta);
  return g;
}

enum class Loss { cross_entropy, bernoulli, squared };

struct Example {
  std::vector<double> input;
  std::vector<double> target;  // one-hot for cross-entropy
  std::vector<double> weight;  // optional per-output weight (bernoulli/squared)
};

struct LossValue {
  double value = 0.0;
  std::vector<double> grad;
  GradientAt at = GradientAt::output;
};

inline LossValue evaluate_loss(Loss loss, const std::vector<double>& output, const Example& ex) {
  constexpr double kFloor = 1e-12;
  if (ex.target.size() != output.size()) fail(ErrorCode::dimension_mismatch, "target width");
  LossValue lv;
  lv.grad.resize(output.size());
  auto weight = [&](std::size_t k) { return ex.weight.empty() ? 1.0 : ex.weight[k]; };
  switch (loss) {
    case Loss::cross_entropy:
      lv.at = GradientAt::logits;
      for (std::size_t k = 0; k < output.size(); ++k) {
        if (ex.target[k] > 0.0) lv.value -= ex.target[k] * std::log(std::max(output[k], kFloor));
        lv.grad[k] = output[k] - ex.target[k];
      }
      break;
    case Loss::bernoulli:
      lv.at = GradientAt::logits;
      for (std::size_t k = 0; k < output.size(); ++k) {
        const double p = std::clamp(output[k], kFloor, 1.0 - kFloor), t = ex.target[k], w = weight(k);
        lv.value -= w * (t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
        lv.grad[k] = w * (output[k] - t);
      }
      break;
    case Loss::squared:
      for (std::size_t k = 0; k < output.size(); ++k) {
        const double diff = output[k] - ex.target[k], w = weight(k);
        lv.value += w * diff * diff;
        lv.grad[k] = 2.0 * w * diff;
      }
      break;
  }
  return lv;
}

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 32;
  double weight_decay = 0.0;  // L2 penalty on weights (not biases)

  void validate() const {
    if (!(learning_rate >= 0.0) || !(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) ||
        !(epsilon > 0.0) || batch_size == 0 || !(weight_decay >= 0.0)) {
      fail(ErrorCode::invalid_config, "Adam configuration out of bounds");
    }
  }
};

class Adam {
 public:
  Adam(const DenseNet& net, AdamConfig config) : config_(config) {
    config_.validate();
    for (const auto& l : net.layers()) {
      m_.push_back({std::vector<double>(l.weight.size(), 0.0), std::vector<double>(l.bias.size(), 0.0)});
    }
    v_ = m_;
  }

  const AdamConfig& config() const { return config_; }

  // Applies one update from mean gradients.
  void step(DenseNet& net, const Gradients& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    auto update = [&](std::vector<double>& param, const std::vector<double>& g, std::vector<double>& m,
                      std::vector<double>& v, double decay) {
      for (std::size_t k = 0; k < param.size(); ++k) {
        const double gk = g[k] + decay * param[k];
        m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * gk;
        v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * gk * gk;
        param[k] -= config_.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + config_.epsilon);
      }
    };
    auto& layers = net.layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
      update(layers[i].weight, grads.layers[i].weight, m_[i].weight, v_[i].weight, config_.weight_decay);
      update(layers[i].bias, grads.layers[i].bias, m_[i].bias, v_[i].bias, 0.0);
    }
  }

 private:
  AdamConfig config_;
  std::vector<LayerGradient> m_, v_;
  std::uint64_t t_ = 0;
};

inline void check_loss_head(const DenseNet& net, Loss loss) {
  if (loss == Loss::cross_entropy && net.head() != Activation::softmax) {
    fail(ErrorCode::invalid_network, "cross-entropy needs a softmax head");
  }
  if (loss == Loss::bernoulli && net.head() != Activation::sigmoid) {
    fail(ErrorCode::invalid_network, "bernoulli reconstruction needs a sigmoid head");
  }
}

// One pass over `examples` in a seeded shuffled order; returns the mean loss.
inline double train_epoch(DenseNet& net, std::span<const Example> examples, Loss loss, Adam& adam, Rng& rng) {
  check_loss_head(net, loss);
  if (examples.empty()) return 0.0;
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  const std::size_t batch = adam.config().batch_size;
  double total = 0.0;
  for (std::size_t start = 0; start < order.size(); start += batch) {
    const std::size_t end = std::min(order.size(), start + batch);
    auto acc = Gradients::zeros_like(net);
    for (std::size_t b = start; b < end; ++b) {
      const auto& ex = examples[order[b]];
      if (ex.input.size() != net.input_width()) fail(ErrorCode::dimension_mismatch, "batch input width");
      auto fr = forward(net, ex.input, Mode::train, rng);
      auto lv = evaluate_loss(loss, fr.output, ex);
      if (!std::isfinite(lv.value)) {
        fail(ErrorCode::non_finite_loss, "loss became non-finite at example " + std::to_string(order[b]));
      }
      total += lv.value;
      acc.add(backward(net, fr.cache, lv.grad, lv.at), 1.0 / static_cast<double>(end - start));
    }
    adam.step(net, acc);
  }
  return total / static_cast<double>(examples.size());
}

inline double mean_loss(const DenseNet& net, std::span<const Example> examples, Loss loss) {
  double total = 0.0;
  for (const auto& ex : examples) total += evaluate_loss(loss, predict(net, ex.input), ex).value;
  return examples.empty() ? 0.0 : total / static_cast<double>(examples.size());
}

struct Certainty {
  double certainty = 0.0;
  std::vector<double> mean_probabilities;
};

// Averages M dropout-active passes; certainty is the largest mean class probability.
inline Certainty mc_certainty(const DenseNet& net, std::span<const double> input, std::size_t samples,
                              std::uint64_t seed) {
  if (net.head() != Activation::softmax) fail(ErrorCode::invalid_network, "certainty needs a softmax head");
  if (samples == 0) fail(ErrorCode::invalid_config, "MC sample count must be >= 1");
  Certainty c;
  if (!net.has_dropout()) {
    c.mean_probabilities = predict(net, input);
  } else {
    c.mean_probabilities.assign(net.output_width(), 0.0);
    for (std::size_t m = 0; m < samples; ++m) {
      Rng rng(mix_seed(seed, m));
      const auto out = forward(net, input, Mode::stochastic_eval, rng).output;
      for (std::size_t k = 0; k < out.size(); ++k) c.mean_probabilities[k] += out[k];
    }
    for (auto& p : c.mean_probabilities) p /= static_cast<double>(samples);
  }
  c.certainty = *std::max_element(c.mean_probabilities.begin(), c.mean_probabilities.end());
  return c;
}

inline std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

// ---- checkpoints ----

inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json to_json(const DenseNet& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : net.layers()) {
    layers.push_back({{"in", l.in},
                      {"out", l.out},
                      {"activation", to_string(l.activation)},
                      {"dropout", l.dropout},
                      {"weight", l.weight},
                      {"bias", l.bias}});
  }
  return {{"format", "costacq-densenet"},
          {"version", kCheckpointVersion},
          {"input_width", net.input_width()},
          {"layers", layers}};
}

inline DenseNet from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "costacq-densenet") {
      fail(ErrorCode::parse_error, "not a network checkpoint");
    }
    if (j.at("version").get<int>() != kCheckpointVersion) {
      fail(ErrorCode::parse_error, "unsupported checkpoint version");
    }
    std::vector<DenseLayer> layers;
    for (const auto& jl : j.at("layers")) {
      DenseLayer l;
      l.in = jl.at("in").get<std::size_t>();
      l.out = jl.at("out").get<std::size_t>();
      l.activation = parse_activation(jl.at("activation").get<std::string>());
      l.dropout = jl.at("dropout").get<double>();
      l.weight = jl.at("weight").get<std::vector<double>>();
      l.bias = jl.at("bias").get<std::vector<double>>();
      layers.push_back(std::move(l));
    }
    return DenseNet(j.at("input_width").get<std::size_t>(), std::move(layers));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace costacq::nn
