#pragma once

#include <algorithm>
#include <fstream>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "costacq/classifier.hpp"
#include "costacq/dae.hpp"
#include "costacq/exhaustive.hpp"
#include "costacq/fact.hpp"
#include "costacq/qlearning.hpp"

namespace costacq {

inline const std::vector<std::string>& strategy_kinds() {
  static const std::vector<std::string> kinds{"exhaustive", "fact", "rl", "ol", "random", "static"};
  return kinds;
}

// Everything needed to train one strategy. Fields not used by `kind` are ignored.
struct StrategySpec {
  std::string kind = "ol";
  ClassifierConfig classifier{};
  DaeConfig dae{};
  std::size_t levels = 3;
  ExhaustiveConfig exhaustive{};
  QConfig q{};
  std::vector<std::size_t> ordering;  // static; empty = rank by exhaustive score per cost

  void validate() const {
    if (std::find(strategy_kinds().begin(), strategy_kinds().end(), kind) == strategy_kinds().end()) {
      fail(ErrorCode::invalid_config, "unknown strategy '" + kind + "'");
    }
    if (levels == 0) fail(ErrorCode::invalid_config, "levels must be >= 1");
    if (exhaustive.bins == 0 || exhaustive.neighbors == 0) fail(ErrorCode::invalid_config, "bins and neighbors must be >= 1");
    if (!(classifier.dropout >= 0.0 && classifier.dropout < 1.0)) fail(ErrorCode::invalid_config, "dropout in [0,1)");
    classifier.adam.validate();
    dae.adam.validate();
    q.validate();
  }
};

namespace detail {

// Copies known keys from `j` into the fields; unknown keys are configuration errors.
class JsonReader {
 public:
  JsonReader(const nlohmann::json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail(ErrorCode::invalid_config, where_ + " must be an object");
  }

  template <class T>
  JsonReader& get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return *this;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::invalid_config, where_ + "." + key + ": " + e.what());
    }
    return *this;
  }

  const nlohmann::json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) fail(ErrorCode::invalid_config, "unknown key " + where_ + "." + key);
    }
  }

 private:
  const nlohmann::json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

inline nlohmann::json adam_json(const nn::AdamConfig& a) {
  return {{"learning_rate", a.learning_rate}, {"beta1", a.beta1},           {"beta2", a.beta2},
          {"epsilon", a.epsilon},             {"batch_size", a.batch_size}, {"weight_decay", a.weight_decay}};
}

inline void read_adam(const nlohmann::json& j, nn::AdamConfig& a, const std::string& where) {
  JsonReader r(j, where);
  r.get("learning_rate", a.learning_rate).get("beta1", a.beta1).get("beta2", a.beta2).get("epsilon", a.epsilon);
  r.get("batch_size", a.batch_size).get("weight_decay", a.weight_decay).finish();
}

}  // namespace detail

inline nlohmann::json to_json(const StrategySpec& s) {
  const auto& c = s.classifier;
  const auto& q = s.q;
  return {{"kind", s.kind},
          {"classifier",
           {{"hidden", c.hidden}, {"dropout", c.dropout}, {"epochs", c.epochs}, {"random_masking", c.random_masking},
            {"mc_samples", c.mc_samples}, {"adam", detail::adam_json(c.adam)}}},
          {"dae",
           {{"hidden", s.dae.hidden}, {"corruption_rate", s.dae.corruption_rate}, {"epochs", s.dae.epochs},
            {"adam", detail::adam_json(s.dae.adam)}}},
          {"levels", s.levels},
          {"exhaustive", {{"bins", s.exhaustive.bins}, {"neighbors", s.exhaustive.neighbors}}},
          {"q",
           {{"lambda", q.lambda}, {"epsilon_start", q.epsilon_start}, {"epsilon_min", q.epsilon_min},
            {"epsilon_decay_fraction", q.epsilon_decay_fraction}, {"replay_capacity", q.replay_capacity},
            {"min_replay", q.min_replay}, {"batch_size", q.batch_size}, {"target_sync", q.target_sync},
            {"gamma", q.gamma}, {"mc_samples", q.mc_samples}, {"stop_threshold", q.stop_threshold},
            {"episodes", q.episodes}, {"hidden", q.hidden}, {"adam", detail::adam_json(q.adam)}}},
          {"ordering", s.ordering}};
}

// Overlays the keys present in `j` onto `spec`.
inline void apply_json(const nlohmann::json& j, StrategySpec& s) {
  detail::JsonReader r(j, "strategy");
  r.get("kind", s.kind).get("levels", s.levels).get("ordering", s.ordering);
  if (const auto* c = r.child("classifier")) {
    detail::JsonReader cr(*c, "classifier");
    cr.get("hidden", s.classifier.hidden).get("dropout", s.classifier.dropout).get("epochs", s.classifier.epochs);
    cr.get("random_masking", s.classifier.random_masking).get("mc_samples", s.classifier.mc_samples);
    if (const auto* a = cr.child("adam")) detail::read_adam(*a, s.classifier.adam, "classifier.adam");
    cr.finish();
  }
  if (const auto* c = r.child("dae")) {
    detail::JsonReader dr(*c, "dae");
    dr.get("hidden", s.dae.hidden).get("corruption_rate", s.dae.corruption_rate).get("epochs", s.dae.epochs);
    if (const auto* a = dr.child("adam")) detail::read_adam(*a, s.dae.adam, "dae.adam");
    dr.finish();
  }
  if (const auto* c = r.child("exhaustive")) {
    detail::JsonReader er(*c, "exhaustive");
    er.get("bins", s.exhaustive.bins).get("neighbors", s.exhaustive.neighbors).finish();
  }
  if (const auto* c = r.child("q")) {
    auto& q = s.q;
    detail::JsonReader qr(*c, "q");
    qr.get("lambda", q.lambda).get("epsilon_start", q.epsilon_start).get("epsilon_min", q.epsilon_min);
    qr.get("epsilon_decay_fraction", q.epsilon_decay_fraction).get("replay_capacity", q.replay_capacity);
    qr.get("min_replay", q.min_replay).get("batch_size", q.batch_size).get("target_sync", q.target_sync);
    qr.get("gamma", q.gamma).get("mc_samples", q.mc_samples).get("stop_threshold", q.stop_threshold);
    qr.get("episodes", q.episodes).get("hidden", q.hidden);
    if (const auto* a = qr.child("adam")) detail::read_adam(*a, q.adam, "q.adam");
    qr.finish();
  }
  r.finish();
}

inline StrategySpec spec_from_json(const nlohmann::json& j) {
  StrategySpec s;
  apply_json(j, s);
  s.q.variant = s.kind == "rl" ? QVariant::rl_based : QVariant::ol;
  return s;
}

// A trained policy with the predictor that makes its final call, plus the
// parts needed to write it back out.
struct TrainedStrategy {
  StrategySpec spec;
  FeatureCatalog catalog;
  std::uint64_t seed = 0;
  std::shared_ptr<const MaskedClassifier> masked;
  std::shared_ptr<const BinaryClassifier> binary;
  std::shared_ptr<const DenoisingAutoencoder> dae;
  std::shared_ptr<const TrainStore> store;
  std::shared_ptr<QStrategy> q;
  std::vector<std::size_t> ordering;
  std::vector<double> episode_rewards;

  std::shared_ptr<const Classifier> predictor() const {
    if (binary) return binary;
    return masked;
  }

  // Rebuilds the policy object over the given catalog (costs may differ from
  // training, e.g. for scaled-cost experiments).
  std::shared_ptr<const Strategy> policy(const FeatureCatalog& c) const {
    const auto& k = spec.kind;
    if (k == "exhaustive") return std::make_shared<ExhaustiveStrategy>(masked, store, c, spec.exhaustive);
    if (k == "fact") return std::make_shared<FactStrategy>(FactModel{binary, dae}, c);
    if (k == "rl" || k == "ol") return q;
    if (k == "random") return std::make_shared<RandomStrategy>();
    if (k == "static") return std::make_shared<StaticOrderStrategy>(ordering);
    fail(ErrorCode::untrained_strategy, "unknown strategy kind '" + k + "'");
  }
  std::shared_ptr<const Strategy> policy() const { return policy(catalog); }
};

// Features ranked by exhaustive utility per cost at the empty state.
inline std::vector<std::size_t> empty_state_ordering(const Classifier& predictor, const TrainStore& store,
                                                     const FeatureCatalog& catalog, const ExhaustiveConfig& config) {
  const auto empty = AcquisitionState::start(catalog);
  Mask allowed(catalog.size(), 1);
  ExhaustiveStrategy probe(std::shared_ptr<const Classifier>(&predictor, [](const Classifier*) {}),
                           std::shared_ptr<const TrainStore>(&store, [](const TrainStore*) {}), catalog, config);
  const auto scores = probe.scores(empty, allowed);
  std::vector<std::size_t> order(catalog.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  return order;
}

inline TrainedStrategy train_strategy(const Dataset& train, StrategySpec spec, std::uint64_t seed) {
  spec.q.variant = spec.kind == "rl" ? QVariant::rl_based : QVariant::ol;
  spec.validate();
  if (train.size() == 0) fail(ErrorCode::insufficient_data, "empty training split");
  TrainedStrategy t;
  t.spec = spec;
  t.catalog = train.catalog;
  t.seed = seed;
  if (spec.kind == "fact") {
    const auto encoder = BinaryEncoder::fit(train.catalog, train.rows, train.availability, spec.levels);
    t.binary = std::make_shared<BinaryClassifier>(BinaryClassifier::train(train, encoder, spec.classifier, mix_seed(seed, 1)));
    t.dae = std::make_shared<DenoisingAutoencoder>(DenoisingAutoencoder::train(train, encoder, spec.dae, mix_seed(seed, 2)));
    return t;
  }
  t.masked = std::make_shared<MaskedClassifier>(MaskedClassifier::train(train, spec.classifier, mix_seed(seed, 1)));
  if (spec.kind == "exhaustive" || (spec.kind == "static" && spec.ordering.empty())) {
    t.store = std::make_shared<TrainStore>(train, spec.exhaustive.bins);
  }
  if (spec.kind == "static") {
    t.ordering = spec.ordering.empty() ? empty_state_ordering(*t.masked, *t.store, train.catalog, spec.exhaustive)
                                       : spec.ordering;
    t.store.reset();
    StaticOrderStrategy check(t.ordering);
    if (t.ordering.size() != train.catalog.size()) fail(ErrorCode::invalid_config, "ordering length != d");
  }
  if (spec.kind == "rl" || spec.kind == "ol") {
    auto result = train_q_strategy(train, *t.masked, spec.q, mix_seed(seed, 3));
    t.q = result.strategy;
    t.episode_rewards = std::move(result.episode_rewards);
  }
  return t;
}

// ---- checkpoints ----

inline constexpr int kStrategyCheckpointVersion = 1;

inline nlohmann::json catalog_json(const FeatureCatalog& c) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : c.entries()) {
    out.push_back({{"name", e.name},
                   {"kind", std::string(to_string(e.kind))},
                   {"category", std::string(to_string(e.category))},
                   {"cost", e.cost.str()},
                   {"encoded_width", e.encoded_width}});
  }
  return out;
}

inline FeatureCatalog catalog_from_json(const nlohmann::json& j) {
  std::vector<FeatureMeta> entries;
  for (const auto& e : j) {
    entries.push_back({e.at("name").get<std::string>(), parse_kind(e.at("kind").get<std::string>()),
                       parse_category(e.at("category").get<std::string>()), Cost::parse(e.at("cost").get<std::string>()),
                       e.at("encoded_width").get<std::size_t>()});
  }
  return FeatureCatalog(std::move(entries));
}

inline nlohmann::json to_json(const TrainedStrategy& t) {
  nlohmann::json j{{"format", "costacq-strategy"},
                   {"version", kStrategyCheckpointVersion},
                   {"strategy", to_json(t.spec)},
                   {"seed", t.seed},
                   {"catalog", catalog_json(t.catalog)}};
  if (t.masked) j["predictor"] = {{"kind", "masked"}, {"mc_samples", t.masked->mc_samples()}, {"net", nn::to_json(t.masked->net())}};
  if (t.binary) j["predictor"] = {{"kind", "binary"}, {"encoder", t.binary->encoder().to_json()}, {"net", nn::to_json(t.binary->net())}};
  if (t.dae) j["dae"] = {{"corruption_rate", t.dae->corruption_rate()}, {"net", nn::to_json(t.dae->net())}};
  if (t.store) j["store"] = {{"bins", t.spec.exhaustive.bins}, {"rows", t.store->rows()}, {"availability", t.store->availability()}};
  if (t.q) j["q"] = {{"disable_predict", t.q->predict_disabled()}, {"net", nn::to_json(t.q->network())}};
  if (!t.ordering.empty()) j["ordering"] = t.ordering;
  if (!t.episode_rewards.empty()) j["episode_rewards"] = t.episode_rewards;
  return j;
}

inline TrainedStrategy strategy_from_json(const nlohmann::json& j) {
  TrainedStrategy t;
  try {
    if (j.at("format") != "costacq-strategy") fail(ErrorCode::parse_error, "not a strategy checkpoint");
    if (j.at("version").get<int>() != kStrategyCheckpointVersion) {
      fail(ErrorCode::unsupported_version, "strategy checkpoint version " + j.at("version").dump());
    }
    t.spec = spec_from_json(j.at("strategy"));
    t.seed = j.at("seed").get<std::uint64_t>();
    t.catalog = catalog_from_json(j.at("catalog"));
    if (j.contains("predictor")) {
      const auto& p = j.at("predictor");
      if (p.at("kind") == "binary") {
        t.binary = std::make_shared<BinaryClassifier>(BinaryEncoder::from_json(p.at("encoder")), t.catalog,
                                                      nn::from_json(p.at("net")));
      } else {
        t.masked = std::make_shared<MaskedClassifier>(nn::from_json(p.at("net")), p.at("mc_samples").get<std::size_t>());
      }
    }
    if (j.contains("dae")) {
      t.dae = std::make_shared<DenoisingAutoencoder>(nn::from_json(j.at("dae").at("net")),
                                                     j.at("dae").at("corruption_rate").get<double>());
    }
    if (j.contains("store")) {
      Dataset ref;
      ref.catalog = t.catalog;
      ref.rows = j.at("store").at("rows").get<std::vector<std::vector<double>>>();
      ref.availability = j.at("store").at("availability").get<std::vector<Mask>>();
      t.store = std::make_shared<TrainStore>(ref, j.at("store").at("bins").get<std::size_t>());
    }
    if (j.contains("q")) {
      t.q = std::make_shared<QStrategy>(t.spec.q.variant, nn::from_json(j.at("q").at("net")), t.spec.q);
      t.q->disable_predict(j.at("q").at("disable_predict").get<bool>());
    }
    if (j.contains("ordering")) t.ordering = j.at("ordering").get<std::vector<std::size_t>>();
    if (j.contains("episode_rewards")) t.episode_rewards = j.at("episode_rewards").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, std::string("strategy checkpoint: ") + e.what());
  }
  if (!t.predictor()) fail(ErrorCode::untrained_strategy, "checkpoint has no predictor");
  t.policy();  // throws if a needed component is missing
  return t;
}

inline void save_strategy(const std::string& path, const TrainedStrategy& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io_error, "cannot write " + path);
  out << to_json(t).dump() << '\n';
}

inline TrainedStrategy load_strategy(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, path + ": " + e.what());
  }
  return strategy_from_json(j);
}

}  // namespace costacq
