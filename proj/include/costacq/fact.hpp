#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "costacq/binary_code.hpp"
#include "costacq/classifier.hpp"
#include "costacq/dae.hpp"
#include "costacq/exhaustive.hpp"
#include "costacq/strategy.hpp"

namespace costacq {

// Binary-input predictor plus the autoencoder that supplies bit posteriors.
struct FactModel {
  std::shared_ptr<const BinaryClassifier> predictor;
  std::shared_ptr<const DenoisingAutoencoder> dae;
};

// Raw (cost-free) sensitivity of each feature: sum over its bits of
// |d h_max / d bit| * p(bit = 1 | state), from one forward and one backward
// pass through the binary predictor.
inline std::vector<double> fact_sensitivities(const AcquisitionState& state, const FactModel& model,
                                              const FeatureCatalog& catalog) {
  if (!model.predictor || !model.dae) fail(ErrorCode::untrained_model, "FACT needs a predictor and an autoencoder");
  const auto& encoder = model.predictor->encoder();
  const auto& net = model.predictor->net();
  const auto bits = encoder.encode_state(state, catalog);
  Rng unused(0);
  const auto fr = nn::forward(net, bits, nn::Mode::eval, unused);
  std::vector<double> seed_grad(fr.output.size(), 0.0);
  seed_grad[nn::argmax(fr.output)] = 1.0;
  const auto grads = nn::backward(net, fr.cache, seed_grad);
  const auto posterior = dae_missing_posteriors(*model.dae, state, catalog, encoder);
  const auto levels = encoder.levels();
  std::vector<double> out(catalog.size(), 0.0);
  for (std::size_t j = 0; j < catalog.size(); ++j) {
    for (auto b = catalog.offset(j) * levels; b < (catalog.offset(j) + catalog.width(j)) * levels; ++b) {
      out[j] += std::abs(grads.input[b]) * posterior[b];
    }
  }
  return out;
}

class FactStrategy : public Strategy {
 public:
  FactStrategy(FactModel model, FeatureCatalog catalog) : model_(std::move(model)), catalog_(std::move(catalog)) {}

  std::string name() const override { return "fact"; }
  const FactModel& model() const { return model_; }

  std::vector<double> scores(const AcquisitionState& state, const Mask& allowed) const {
    const auto raw = fact_sensitivities(state, model_, catalog_);
    std::vector<double> out(raw.size(), 0.0);
    for (std::size_t j = 0; j < raw.size(); ++j) {
      if (allowed[j]) out[j] = ExhaustiveStrategy::per_cost(raw[j], catalog_.cost(j));
    }
    return out;
  }

  Decision select(const AcquisitionState& state, const Mask& allowed, Rng&) const override {
    const auto best = argmax_allowed(scores(state, allowed), allowed);
    return best ? Decision::acquire(*best) : Decision::stop();
  }

 private:
  FactModel model_;
  FeatureCatalog catalog_;
};

}  // namespace costacq
