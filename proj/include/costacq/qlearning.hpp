#pragma once

#include <cmath>
#include <deque>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "costacq/classifier.hpp"
#include "costacq/dataset.hpp"
#include "costacq/nn.hpp"
#include "costacq/strategy.hpp"

namespace costacq {

enum class QVariant { rl_based, ol };

inline std::string to_string(QVariant v) { return v == QVariant::rl_based ? "rl" : "ol"; }

struct QConfig {
  QVariant variant = QVariant::ol;
  double lambda = 1.0;  // misclassification penalty (rl_based)
  double epsilon_start = 1.0;
  double epsilon_min = 0.05;
  double epsilon_decay_fraction = 0.2;  // share of episodes over which epsilon decays
  std::size_t replay_capacity = 10'000;
  std::size_t min_replay = 64;  // no updates before the buffer holds this many transitions
  std::size_t batch_size = 64;
  std::size_t target_sync = 500;
  double gamma = 1.0;
  std::size_t mc_samples = 30;  // certainty samples for the ol reward
  double stop_threshold = 0.0;  // ol stops when max Q falls below this
  std::size_t episodes = 2000;
  std::vector<std::size_t> hidden{64, 64};
  nn::AdamConfig adam{};

  void validate() const {
    if (lambda < 0.0 || !(gamma >= 0.0 && gamma <= 1.0) || stop_threshold < 0.0 || !(epsilon_start >= 0.0 && epsilon_start <= 1.0) ||
        !(epsilon_min >= 0.0 && epsilon_min <= 1.0) || replay_capacity == 0 || batch_size == 0 ||
        target_sync == 0 || mc_samples == 0) {
      fail(ErrorCode::invalid_config, "Q-learning configuration out of bounds");
    }
    adam.validate();
  }
};

struct Action {
  enum class Kind { acquire, predict };
  Kind kind = Kind::acquire;
  std::size_t feature = 0;  // acquire
  int predicted = 0;        // predict
};

struct Transition {
  AcquisitionState before;
  Action action;
  double reward = 0.0;
  AcquisitionState after;
  bool terminal = false;
};

// -c_j for an acquisition, 0 for a correct prediction, -lambda otherwise.
inline double rl_reward(const Action& action, int label, double lambda, const FeatureCatalog& catalog) {
  if (action.kind == Action::Kind::acquire) return -catalog.cost(action.feature).to_double();
  return action.predicted == label ? 0.0 : -lambda;
}

// |Cert(x) - Cert(q(x, j))| / c_j, both certainties drawn with the same seed.
inline double ol_reward(const AcquisitionState& state, std::size_t j, std::span<const double> row,
                        const Classifier& predictor, const FeatureCatalog& catalog, std::size_t samples,
                        std::uint64_t seed) {
  if (catalog.cost(j).micros() == 0) fail(ErrorCode::zero_cost, "feature " + catalog[j].name + " has zero cost");
  const auto next = query_from_row(state, j, row, catalog);
  const double before = predictor.certainty(state, samples, seed);
  const double after = predictor.certainty(next, samples, seed);
  return std::abs(before - after) / catalog.cost(j).to_double();
}

// With probability epsilon a uniformly random legal action, else the greedy one
// (lowest index on ties).
inline std::size_t epsilon_greedy(const std::vector<double>& q, const Mask& legal, double epsilon, Rng& rng) {
  std::vector<std::size_t> options;
  for (std::size_t a = 0; a < legal.size(); ++a) {
    if (legal[a]) options.push_back(a);
  }
  if (options.empty()) fail(ErrorCode::invalid_config, "no legal action");
  if (rng.uniform() < epsilon) return options[rng.index(options.size())];
  return *argmax_allowed(q, legal);
}

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

  void push(Transition t) {
    if (items_.size() == capacity_) items_.pop_front();
    items_.push_back(std::move(t));
  }
  std::size_t size() const { return items_.size(); }
  const Transition& sample(Rng& rng) const { return items_[rng.index(items_.size())]; }

 private:
  std::size_t capacity_;
  std::deque<Transition> items_;
};

class QStrategy : public Strategy {
 public:
  QStrategy(QVariant variant, nn::DenseNet q, QConfig config)
      : variant_(variant), q_(std::move(q)), config_(std::move(config)) {}

  std::string name() const override { return to_string(variant_); }
  QVariant variant() const { return variant_; }
  const nn::DenseNet& network() const { return q_; }
  const QConfig& config() const { return config_; }

  // The lambda -> infinity limit: a wrong prediction costs more than any
  // acquisition, so the policy buys every feature it is allowed to.
  void disable_predict(bool disabled) { predict_disabled_ = disabled; }
  bool predict_disabled() const { return predict_disabled_; }

  std::vector<double> q_values(const AcquisitionState& state) const { return nn::predict(q_, masked_input(state)); }

  Decision select(const AcquisitionState& state, const Mask& allowed, Rng&) const override {
    const auto q = q_values(state);
    const auto d = state.num_features();
    Mask legal(q.size(), 0);
    for (std::size_t j = 0; j < d; ++j) legal[j] = allowed[j];
    if (variant_ == QVariant::rl_based) {
      if (predict_disabled_) {
        const auto best = first_allowed(legal) ? argmax_allowed(q, legal) : std::nullopt;
        return best ? Decision::acquire(*best) : Decision::predict();
      }
      legal[d] = 1;
      const auto best = *argmax_allowed(q, legal);
      return best == d ? Decision::predict() : Decision::acquire(best);
    }
    const auto best = argmax_allowed(q, legal);
    if (!best || q[*best] < config_.stop_threshold) return Decision::stop();
    return Decision::acquire(*best);
  }

 private:
  QVariant variant_;
  nn::DenseNet q_;
  QConfig config_;
  bool predict_disabled_ = false;
};

struct QTrainingResult {
  std::shared_ptr<QStrategy> strategy;
  std::vector<double> episode_rewards;
  std::size_t updates = 0;
  double last_td_loss = 0.0;
};

inline double epsilon_at(const QConfig& c, std::size_t episode) {
  const double horizon = c.epsilon_decay_fraction * static_cast<double>(c.episodes);
  if (horizon <= 0.0) return c.epsilon_min;
  const double frac = static_cast<double>(episode) / horizon;
  if (frac >= 1.0) return c.epsilon_min;
  return std::max(c.epsilon_min, c.epsilon_start + (c.epsilon_min - c.epsilon_start) * frac);
}

// Legal actions of the training MDP: unacquired features, plus Predict (index
// d) for the rl_based variant.
inline Mask legal_actions(const AcquisitionState& state, QVariant variant) {
  const auto d = state.num_features();
  Mask legal(d + (variant == QVariant::rl_based ? 1 : 0), 0);
  for (std::size_t j = 0; j < d; ++j) legal[j] = !state.acquired[j];
  if (variant == QVariant::rl_based) legal[d] = 1;
  return legal;
}

// Episodic deep Q-learning with experience replay and a periodically synced
// target network. `predictor` supplies predictions (rl_based) or certainties (ol).
inline QTrainingResult train_q_strategy(const Dataset& data, const Classifier& predictor, const QConfig& config,
                                        std::uint64_t seed, const Mask& free_at_start = {}) {
  config.validate();
  if (data.size() == 0) fail(ErrorCode::insufficient_data, "no training rows");
  const auto& catalog = data.catalog;
  const auto d = catalog.size();
  const auto actions = d + (config.variant == QVariant::rl_based ? 1 : 0);
  Rng rng(seed);
  auto q = nn::DenseNet::mlp(catalog.encoded_width() + d, config.hidden, actions, nn::Activation::identity, 0.0, rng);
  auto target = q;
  nn::Adam adam(q, config.adam);
  ReplayBuffer buffer(config.replay_capacity);
  QTrainingResult result;
  std::size_t steps = 0;

  auto update = [&] {
    auto acc = nn::Gradients::zeros_like(q);
    double loss = 0.0;
    const double scale = 1.0 / static_cast<double>(config.batch_size);
    for (std::size_t b = 0; b < config.batch_size; ++b) {
      const auto& t = buffer.sample(rng);
      double y = t.reward;
      if (!t.terminal) {
        const auto next_q = nn::predict(target, masked_input(t.after));
        const auto legal = legal_actions(t.after, config.variant);
        if (auto best = argmax_allowed(next_q, legal)) y += config.gamma * next_q[*best];
      }
      const auto fr = nn::forward(q, masked_input(t.before), nn::Mode::train, rng);
      const std::size_t a = t.action.kind == Action::Kind::predict ? d : t.action.feature;
      const double diff = fr.output[a] - y;
      loss += diff * diff * scale;
      std::vector<double> grad(actions, 0.0);
      grad[a] = 2.0 * diff;
      acc.add(nn::backward(q, fr.cache, grad), scale);
    }
    if (!std::isfinite(loss)) fail(ErrorCode::diverged_q, "temporal-difference loss is non-finite");
    adam.step(q, acc);
    result.last_td_loss = loss;
    ++result.updates;
  };

  for (std::size_t episode = 0; episode < config.episodes; ++episode) {
    const double epsilon = epsilon_at(config, episode);
    const auto i = rng.index(data.size());
    const auto& row = data.rows[i];
    const int label = data.labels[i];
    auto state = AcquisitionState::start(catalog, row, free_at_start);
    double episode_reward = 0.0;
    while (true) {
      const auto legal = legal_actions(state, config.variant);
      if (!first_allowed(legal)) break;
      const auto a = epsilon_greedy(nn::predict(q, masked_input(state)), legal, epsilon, rng);
      Transition t;
      t.before = state;
      if (config.variant == QVariant::rl_based && a == d) {
        t.action = {Action::Kind::predict, 0, predictor.predict(state)};
        t.reward = rl_reward(t.action, label, config.lambda, catalog);
        t.after = state;
        t.terminal = true;
      } else {
        t.action = {Action::Kind::acquire, a, 0};
        t.after = query_from_row(state, a, row, catalog);
        t.reward = config.variant == QVariant::rl_based
                       ? rl_reward(t.action, label, config.lambda, catalog)
                       : ol_reward(state, a, row, predictor, catalog, config.mc_samples, mix_seed(seed, steps));
        t.terminal = config.variant == QVariant::ol && available_actions(t.after).empty();
      }
      episode_reward += t.reward;
      const bool terminal = t.terminal;
      state = t.after;
      buffer.push(std::move(t));
      ++steps;
      if (buffer.size() >= std::max(config.min_replay, std::size_t{1})) update();
      if (steps % config.target_sync == 0) target = q;
      if (terminal) break;
    }
    result.episode_rewards.push_back(episode_reward);
  }
  result.strategy = std::make_shared<QStrategy>(config.variant, std::move(q), config);
  return result;
}

}  // namespace costacq
