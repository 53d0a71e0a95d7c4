#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "costacq/acquisition.hpp"
#include "costacq/classifier.hpp"
#include "costacq/rng.hpp"
#include "costacq/trajectory.hpp"

namespace costacq {

struct Decision {
  enum class Kind { acquire, stop, predict };
  Kind kind = Kind::stop;
  std::size_t feature = 0;

  static Decision acquire(std::size_t j) { return {Kind::acquire, j}; }
  static Decision stop() { return {Kind::stop, 0}; }
  static Decision predict() { return {Kind::predict, 0}; }
};

// A policy over acquisition states. `allowed[j]` is set for features that are
// unacquired and fit the budget; select never returns a feature outside it.
class Strategy {
 public:
  virtual ~Strategy() = default;
  virtual std::string name() const = 0;
  virtual Decision select(const AcquisitionState& state, const Mask& allowed, Rng& rng) const = 0;
};

inline std::optional<std::size_t> first_allowed(const Mask& allowed) {
  for (std::size_t j = 0; j < allowed.size(); ++j) {
    if (allowed[j]) return j;
  }
  return std::nullopt;
}

// Highest score among allowed features, lowest index on ties.
inline std::optional<std::size_t> argmax_allowed(const std::vector<double>& scores, const Mask& allowed) {
  std::optional<std::size_t> best;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (!allowed[j]) continue;
    if (!best || scores[j] > scores[*best]) best = j;
  }
  return best;
}

class RandomStrategy : public Strategy {
 public:
  std::string name() const override { return "random"; }
  Decision select(const AcquisitionState&, const Mask& allowed, Rng& rng) const override {
    std::vector<std::size_t> options;
    for (std::size_t j = 0; j < allowed.size(); ++j) {
      if (allowed[j]) options.push_back(j);
    }
    if (options.empty()) return Decision::stop();
    return Decision::acquire(options[rng.index(options.size())]);
  }
};

class StaticOrderStrategy : public Strategy {
 public:
  explicit StaticOrderStrategy(std::vector<std::size_t> ordering) : ordering_(std::move(ordering)) {
    std::vector<bool> seen(ordering_.size(), false);
    for (auto j : ordering_) {
      if (j >= ordering_.size() || seen[j]) fail(ErrorCode::invalid_config, "static ordering is not a permutation");
      seen[j] = true;
    }
  }

  std::string name() const override { return "static"; }
  const std::vector<std::size_t>& ordering() const { return ordering_; }

  Decision select(const AcquisitionState& state, const Mask& allowed, Rng&) const override {
    if (allowed.size() != ordering_.size() || state.num_features() != ordering_.size()) {
      fail(ErrorCode::dimension_mismatch, "static ordering length != d");
    }
    for (auto j : ordering_) {
      if (allowed[j]) return Decision::acquire(j);
    }
    return Decision::stop();
  }

 private:
  std::vector<std::size_t> ordering_;
};

struct EpisodeResult {
  std::vector<std::size_t> order;
  std::vector<Cost> step_costs;
  int prediction = 0;
  int label = 0;
  bool correct = false;
  Cost total_cost;
  AcquisitionState final_state;
};

struct EpisodeOptions {
  Mask free_at_start;          // k0; empty means none
  std::size_t mc_samples = 30;  // for confidence rules
  std::uint64_t seed = 0;
};

// Runs one test-time episode: acquire until the rule fires or the strategy
// stops/predicts, then classify the terminal state.
inline EpisodeResult run_episode(const Strategy& strategy, std::span<const double> row, int label,
                                 const FeatureCatalog& catalog, const TerminationRule& rule,
                                 const Classifier& predictor, const EpisodeOptions& options = {}) {
  Rng rng(options.seed);
  auto state = AcquisitionState::start(catalog, row, options.free_at_start);
  EpisodeResult result;
  const auto d = catalog.size();
  while (true) {
    const double certainty =
        rule.uses_certainty() ? predictor.certainty(state, options.mc_samples, mix_seed(options.seed, state.step)) : 0.0;
    if (is_terminal(state, rule, certainty, catalog)) break;
    Mask allowed(d, 0);
    bool any = false;
    for (std::size_t j = 0; j < d; ++j) {
      allowed[j] = !state.acquired[j] && rule.affordable(state, j, catalog);
      any = any || allowed[j];
    }
    if (!any) break;
    const auto decision = strategy.select(state, allowed, rng);
    if (decision.kind != Decision::Kind::acquire) break;
    if (decision.feature >= d || !allowed[decision.feature]) {
      fail(ErrorCode::invalid_config, strategy.name() + " selected a disallowed feature");
    }
    state = query_from_row(state, decision.feature, row, catalog);
    result.order.push_back(decision.feature);
    result.step_costs.push_back(catalog.cost(decision.feature));
  }
  result.prediction = predictor.predict(state);
  result.label = label;
  result.correct = result.prediction == label;
  result.total_cost = total_cost(state, catalog);
  result.final_state = std::move(state);
  return result;
}

inline std::vector<TrajectoryStep> trajectory_of(const EpisodeResult& episode, std::size_t episode_id) {
  std::vector<TrajectoryStep> out;
  Cost spent;
  for (std::size_t t = 0; t < episode.order.size(); ++t) {
    spent += episode.step_costs[t];
    out.push_back({episode_id, t + 1, episode.order[t], episode.step_costs[t], spent});
  }
  return out;
}

}  // namespace costacq
