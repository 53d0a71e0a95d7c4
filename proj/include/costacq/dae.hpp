#pragma once

#include <vector>

#include "costacq/acquisition.hpp"
#include "costacq/binary_code.hpp"
#include "costacq/classifier.hpp"
#include "costacq/dataset.hpp"
#include "costacq/nn.hpp"

namespace costacq {

struct DaeConfig {
  std::vector<std::size_t> hidden{64};
  double corruption_rate = 0.5;
  std::size_t epochs = 40;
  nn::AdamConfig adam{};
};

// Maps D*l bits, with unobserved groups set to 0.5, to D*l Bernoulli
// probabilities through a sigmoid head.
class DenoisingAutoencoder {
 public:
  DenoisingAutoencoder(nn::DenseNet net, double corruption_rate)
      : net_(std::move(net)), corruption_rate_(corruption_rate) {
    if (net_.input_width() != net_.output_width()) fail(ErrorCode::invalid_network, "autoencoder widths differ");
    if (net_.head() != nn::Activation::sigmoid) fail(ErrorCode::invalid_network, "autoencoder needs a sigmoid head");
    if (!(corruption_rate_ >= 0.0 && corruption_rate_ < 1.0)) fail(ErrorCode::invalid_config, "corruption rate");
  }

  const nn::DenseNet& net() const { return net_; }
  double corruption_rate() const { return corruption_rate_; }

  static DenoisingAutoencoder train(const Dataset& data, const BinaryEncoder& encoder, const DaeConfig& config,
                                    std::uint64_t seed) {
    Rng rng(seed);
    const auto width = encoder.bit_width();
    const auto levels = encoder.levels();
    const auto& catalog = data.catalog;
    auto net = nn::DenseNet::mlp(width, config.hidden, width, nn::Activation::sigmoid, 0.0, rng);
    DenoisingAutoencoder dae(std::move(net), config.corruption_rate);
    nn::Adam adam(dae.net_, config.adam);
    std::vector<nn::Example> examples(data.size());
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
      for (std::size_t i = 0; i < data.size(); ++i) {
        Mask kept(catalog.size());
        for (auto& bit : kept) bit = rng.uniform() >= config.corruption_rate ? 1 : 0;
        auto& ex = examples[i];
        ex.input = encoder.encode(data.rows[i], kept, catalog);
        ex.target = encoder.encode(data.rows[i], Mask(catalog.size(), 1), catalog);
        ex.weight.assign(width, 0.0);
        for (std::size_t j = 0; j < catalog.size(); ++j) {
          if (!data.availability[i][j]) continue;
          const auto first = catalog.offset(j) * levels;
          const auto last = (catalog.offset(j) + catalog.width(j)) * levels;
          for (auto b = first; b < last; ++b) ex.weight[b] = 1.0;
        }
      }
      nn::train_epoch(dae.net_, examples, nn::Loss::bernoulli, adam, rng);
    }
    return dae;
  }

 private:
  nn::DenseNet net_;
  double corruption_rate_;
};

// p(bit = 1 | observed part of the state), flattened column-major by bit:
// entry [c * l + m] is bit m of encoded column c. Acquired features carry
// their actual hard bits.
inline std::vector<double> dae_missing_posteriors(const DenoisingAutoencoder& dae, const AcquisitionState& state,
                                                  const FeatureCatalog& catalog, const BinaryEncoder& encoder) {
  check_dimensions(state, catalog);
  const auto bits = encoder.encode_state(state, catalog);
  if (bits.size() != dae.net().input_width()) fail(ErrorCode::dimension_mismatch, "autoencoder input width");
  auto out = nn::predict(dae.net(), bits);
  const auto levels = encoder.levels();
  for (std::size_t j = 0; j < catalog.size(); ++j) {
    if (!state.acquired[j]) continue;
    for (auto b = catalog.offset(j) * levels; b < (catalog.offset(j) + catalog.width(j)) * levels; ++b) {
      out[b] = bits[b];
    }
  }
  return out;
}

}  // namespace costacq
