#pragma once

#include <memory>
#include <vector>

#include "costacq/acquisition.hpp"
#include "costacq/binary_code.hpp"
#include "costacq/dataset.hpp"
#include "costacq/nn.hpp"

namespace costacq {

// Partial-state classifier: class probabilities and certainty for a state.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual std::size_t num_classes() const = 0;
  virtual std::vector<double> probabilities(const AcquisitionState& state) const = 0;
  virtual double certainty(const AcquisitionState& state, std::size_t samples, std::uint64_t seed) const = 0;

  int predict(const AcquisitionState& state) const {
    const auto p = probabilities(state);
    return static_cast<int>(nn::argmax(p));
  }
};

// Zero-imputed values followed by the per-feature mask (width D + d).
inline std::vector<double> masked_input(std::span<const double> values, std::span<const std::uint8_t> mask) {
  std::vector<double> x(values.begin(), values.end());
  x.reserve(values.size() + mask.size());
  for (auto m : mask) x.push_back(m ? 1.0 : 0.0);
  return x;
}

inline std::vector<double> masked_input(const AcquisitionState& state) {
  return masked_input(state.values, state.acquired);
}

inline std::vector<double> one_hot_target(int label, std::size_t classes) {
  std::vector<double> t(classes, 0.0);
  t.at(static_cast<std::size_t>(label)) = 1.0;
  return t;
}

// Random acquisition mask with a per-example keep probability drawn uniformly,
// so the model sees every acquisition depth during training. A feature that is
// acquired but missing in the data keeps mask 1 and value 0, as at test time.
inline Mask random_observation_mask(std::size_t d, Rng& rng) {
  const double keep = rng.uniform();
  Mask m(d);
  for (auto& bit : m) bit = rng.uniform() < keep ? 1 : 0;
  return m;
}

inline std::vector<double> apply_mask(std::span<const double> row, std::span<const std::uint8_t> mask,
                                      const FeatureCatalog& catalog) {
  std::vector<double> out(row.size(), 0.0);
  for (std::size_t j = 0; j < catalog.size(); ++j) {
    if (!mask[j]) continue;
    for (std::size_t c = catalog.offset(j); c < catalog.offset(j) + catalog.width(j); ++c) out[c] = row[c];
  }
  return out;
}

struct ClassifierConfig {
  std::vector<std::size_t> hidden{32, 32};
  double dropout = 0.1;
  std::size_t epochs = 40;
  nn::AdamConfig adam{};
  bool random_masking = true;
  std::size_t mc_samples = 30;
};

class MaskedClassifier : public Classifier {
 public:
  MaskedClassifier(nn::DenseNet net, std::size_t mc_samples = 30) : net_(std::move(net)), mc_samples_(mc_samples) {}

  std::size_t num_classes() const override { return net_.output_width(); }
  const nn::DenseNet& net() const { return net_; }
  std::size_t mc_samples() const { return mc_samples_; }

  std::vector<double> probabilities(const AcquisitionState& state) const override {
    return nn::predict(net_, masked_input(state));
  }

  double certainty(const AcquisitionState& state, std::size_t samples, std::uint64_t seed) const override {
    return nn::mc_certainty(net_, masked_input(state), samples, seed).certainty;
  }

  static MaskedClassifier train(const Dataset& data, const ClassifierConfig& config, std::uint64_t seed) {
    Rng rng(seed);
    const auto d = data.catalog.size();
    auto net = nn::DenseNet::mlp(data.catalog.encoded_width() + d, config.hidden, data.num_classes,
                                 nn::Activation::softmax, config.dropout, rng);
    nn::Adam adam(net, config.adam);
    std::vector<nn::Example> examples(data.size());
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
      for (std::size_t i = 0; i < data.size(); ++i) {
        const auto mask = config.random_masking ? random_observation_mask(d, rng) : Mask(d, 1);
        examples[i].input = masked_input(apply_mask(data.rows[i], mask, data.catalog), mask);
        examples[i].target = one_hot_target(data.labels[i], data.num_classes);
      }
      nn::train_epoch(net, examples, nn::Loss::cross_entropy, adam, rng);
    }
    return MaskedClassifier(std::move(net), config.mc_samples);
  }

 private:
  nn::DenseNet net_;
  std::size_t mc_samples_;
};

// Classifier over the l-bit binary representation of the state.
class BinaryClassifier : public Classifier {
 public:
  BinaryClassifier(BinaryEncoder encoder, FeatureCatalog catalog, nn::DenseNet net)
      : encoder_(std::move(encoder)), catalog_(std::move(catalog)), net_(std::move(net)) {
    if (net_.input_width() != encoder_.bit_width()) fail(ErrorCode::dimension_mismatch, "binary classifier width");
  }

  std::size_t num_classes() const override { return net_.output_width(); }
  const nn::DenseNet& net() const { return net_; }
  const BinaryEncoder& encoder() const { return encoder_; }

  std::vector<double> probabilities(const AcquisitionState& state) const override {
    return nn::predict(net_, encoder_.encode_state(state, catalog_));
  }

  double certainty(const AcquisitionState& state, std::size_t samples, std::uint64_t seed) const override {
    return nn::mc_certainty(net_, encoder_.encode_state(state, catalog_), samples, seed).certainty;
  }

  static BinaryClassifier train(const Dataset& data, const BinaryEncoder& encoder, const ClassifierConfig& config,
                                std::uint64_t seed) {
    Rng rng(seed);
    const auto d = data.catalog.size();
    auto net = nn::DenseNet::mlp(encoder.bit_width(), config.hidden, data.num_classes, nn::Activation::softmax,
                                 config.dropout, rng);
    nn::Adam adam(net, config.adam);
    std::vector<nn::Example> examples(data.size());
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
      for (std::size_t i = 0; i < data.size(); ++i) {
        const auto mask = config.random_masking ? random_observation_mask(d, rng) : Mask(d, 1);
        examples[i].input = encoder.encode(data.rows[i], mask, data.catalog);
        examples[i].target = one_hot_target(data.labels[i], data.num_classes);
      }
      nn::train_epoch(net, examples, nn::Loss::cross_entropy, adam, rng);
    }
    return BinaryClassifier(encoder, data.catalog, std::move(net));
  }

 private:
  BinaryEncoder encoder_;
  FeatureCatalog catalog_;
  nn::DenseNet net_;
};

// Fraction of rows classified correctly with every available feature observed.
inline double full_feature_accuracy(const Classifier& clf, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    AcquisitionState s = AcquisitionState::start(data.catalog);
    for (std::size_t j = 0; j < data.catalog.size(); ++j) s = query_from_row(s, j, data.rows[i], data.catalog);
    correct += clf.predict(s) == data.labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace costacq
