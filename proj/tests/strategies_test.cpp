#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>

#include "costacq/exhaustive.hpp"
#include "costacq/fact.hpp"
#include "costacq/qlearning.hpp"
#include "costacq/synthetic.hpp"
#include "support/oracles.hpp"

using namespace costacq;
using oracle::FunctionClassifier;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::io_error;
}

FeatureCatalog unit_catalog(std::size_t d) { return make_real_catalog(std::vector<Cost>(d, Cost::units(1))); }

Mask all_allowed(const AcquisitionState& s) {
  Mask m(s.num_features());
  for (std::size_t j = 0; j < m.size(); ++j) m[j] = !s.acquired[j];
  return m;
}

}  // namespace

// ---- rewards ----

TEST(RlReward, Examples) {
  const auto catalog = make_real_catalog({Cost::units(2), Cost::units(4)});
  EXPECT_EQ(rl_reward({Action::Kind::acquire, 1, 0}, 0, 10.0, catalog), -4.0);
  EXPECT_EQ(rl_reward({Action::Kind::predict, 0, 1}, 1, 10.0, catalog), 0.0);
  EXPECT_EQ(rl_reward({Action::Kind::predict, 0, 0}, 1, 10.0, catalog), -10.0);
}

TEST(OlReward, CertaintyDeltaPerCost) {
  const auto catalog = make_real_catalog({Cost::units(5), Cost::units(1)});
  FunctionClassifier clf(
      2, [](const AcquisitionState&) { return std::vector<double>{0.5, 0.5}; },
      [](const AcquisitionState& s) { return s.acquired[0] ? 0.9 : 0.6; });
  const auto s = AcquisitionState::start(catalog);
  const std::vector<double> row{1.0, 2.0};
  EXPECT_NEAR(ol_reward(s, 0, row, clf, catalog, 30, 1), 0.06, 1e-15);
  EXPECT_EQ(ol_reward(s, 1, row, clf, catalog, 30, 1), 0.0);
  const auto free = make_real_catalog({Cost::units(0), Cost::units(1)});
  EXPECT_EQ(code_of([&] { ol_reward(s, 0, row, clf, free, 30, 1); }), ErrorCode::zero_cost);
}

TEST(OlReward, IgnoredFeatureWithoutDropoutIsZero) {
  Rng rng(3);
  const auto catalog = unit_catalog(3);
  auto net = nn::DenseNet::mlp(6, {8}, 2, nn::Activation::softmax, 0.0, rng);
  // sever every path from feature 2 (value and mask inputs)
  auto& first = net.layers()[0];
  for (std::size_t o = 0; o < first.out; ++o) {
    first.weight[o * first.in + 2] = 0.0;
    first.weight[o * first.in + 5] = 0.0;
  }
  MaskedClassifier clf(net);
  const auto s = AcquisitionState::start(catalog);
  const std::vector<double> row{0.3, -1.2, 2.5};
  EXPECT_EQ(ol_reward(s, 2, row, clf, catalog, 30, 9), 0.0);
  EXPECT_GT(ol_reward(s, 0, row, clf, catalog, 30, 9), 0.0);
}

TEST(OlReward, CostRescaleScalesRewardInversely) {
  Rng rng(4);
  const auto catalog = make_real_catalog({Cost::units(3), Cost::units(2)});
  MaskedClassifier clf(nn::DenseNet::mlp(4, {8}, 2, nn::Activation::softmax, 0.3, rng));
  const auto s = AcquisitionState::start(catalog);
  const std::vector<double> row{0.7, -0.4};
  const double base = ol_reward(s, 0, row, clf, catalog, 30, 5);
  EXPECT_GT(base, 0.0);
  for (double alpha : {0.5, 2.0, 10.0}) {
    const double scaled = ol_reward(s, 0, row, clf, catalog.scaled(alpha), 30, 5);
    EXPECT_NEAR(scaled * alpha, base, 1e-15 * base) << alpha;
  }
}

// ---- exhaustive ----

namespace {

// f0 in {-1, +1}; f1 in {0, 1, 2, 3} with counts depending on f0. Each f1 value
// appears equally often overall, so four bins hold one value each.
Dataset joint_table_dataset() {
  const std::map<std::pair<int, int>, int> counts{{{-1, 0}, 30}, {{-1, 1}, 10}, {{-1, 2}, 15}, {{-1, 3}, 5},
                                                  {{1, 0}, 10},  {{1, 1}, 30},  {{1, 2}, 25},  {{1, 3}, 35}};
  Dataset d;
  d.catalog = unit_catalog(2);
  d.num_classes = 2;
  for (const auto& [key, n] : counts) {
    for (int k = 0; k < n; ++k) {
      d.rows.push_back({double(key.first), double(key.second)});
      d.availability.push_back({1, 1});
      d.labels.push_back(key.first > 0);
    }
  }
  return d;
}

std::vector<double> toy_probs(const AcquisitionState& s) {
  return oracle::logistic_pair(0.8 * s.values[0] + 0.6 * s.values[1] - 0.3);
}

}  // namespace

TEST(Exhaustive, IgnoredFeatureHasZeroUtility) {
  const auto data = joint_table_dataset();
  const TrainStore store(data, 4);
  FunctionClassifier clf(2, [](const AcquisitionState& s) { return oracle::logistic_pair(s.values[0]); });
  const auto s = AcquisitionState::start(data.catalog);
  EXPECT_EQ(exhaustive_utility(s, 1, clf, store, {4, 50}), 0.0);
  EXPECT_GT(exhaustive_utility(s, 0, clf, store, {4, 50}), 0.0);
}

TEST(Exhaustive, MatchesBruteForceOverJointTable) {
  const auto data = joint_table_dataset();
  const TrainStore store(data, 4);
  FunctionClassifier clf(2, toy_probs);
  for (double f0 : {-1.0, 1.0}) {
    const auto s = query(AcquisitionState::start(data.catalog), 0, f0, data.catalog);
    // neighbours = all rows sharing f0 (distance 0); every other row is 2 away
    const std::size_t matching = f0 < 0 ? 60 : 100;
    const double got = exhaustive_utility(s, 1, clf, store, {4, matching});
    double expected = 0.0;
    const auto before = toy_probs(s);
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data.rows[i][0] != f0) continue;
      const auto after = toy_probs(query(s, 1, data.rows[i][1], data.catalog));
      expected += (std::abs(after[0] - before[0]) + std::abs(after[1] - before[1])) / double(matching);
    }
    EXPECT_NEAR(got, expected, 1e-9) << f0;
  }
  // nothing acquired: marginal over all 160 rows
  const auto empty = AcquisitionState::start(data.catalog);
  double expected = 0.0;
  const auto before = toy_probs(empty);
  for (const auto& row : data.rows) {
    const auto after = toy_probs(query(empty, 1, row[1], data.catalog));
    expected += (std::abs(after[0] - before[0]) + std::abs(after[1] - before[1])) / 160.0;
  }
  EXPECT_NEAR(exhaustive_utility(empty, 1, clf, store, {4, 50}), expected, 1e-9);
}

TEST(Exhaustive, DegenerateConditionalGivesSingleBinUtility) {
  Dataset d;
  d.catalog = unit_catalog(2);
  for (int i = 0; i < 40; ++i) {
    const double f0 = i % 2 ? 1.0 : -1.0;
    d.rows.push_back({f0, f0 > 0 ? 3.0 : 0.0});  // f1 determined by f0
    d.availability.push_back({1, 1});
    d.labels.push_back(i % 2);
  }
  const TrainStore store(d, 10);
  FunctionClassifier clf(2, toy_probs);
  const auto s = query(AcquisitionState::start(d.catalog), 0, 1.0, d.catalog);
  const auto before = toy_probs(s), after = toy_probs(query(s, 1, 3.0, d.catalog));
  EXPECT_NEAR(exhaustive_utility(s, 1, clf, store, {10, 20}), l1_distance(before, after), 1e-15);
}

TEST(Exhaustive, Errors) {
  const auto data = joint_table_dataset();
  const TrainStore store(data, 4);
  FunctionClassifier clf(2, toy_probs);
  const auto s = query(AcquisitionState::start(data.catalog), 0, 1.0, data.catalog);
  EXPECT_EQ(code_of([&] { exhaustive_utility(s, 0, clf, store, {}); }), ErrorCode::already_acquired);
  EXPECT_EQ(code_of([&] { exhaustive_utility(s, 2, clf, store, {}); }), ErrorCode::index_out_of_range);
  Dataset empty;
  empty.catalog = data.catalog;
  const TrainStore none(empty, 4);
  EXPECT_EQ(code_of([&] { exhaustive_utility(s, 1, clf, none, {}); }), ErrorCode::empty_store);
}

TEST(Exhaustive, PerCostSelectionAndTies) {
  EXPECT_EQ(*argmax_allowed({ExhaustiveStrategy::per_cost(0.2, Cost::units(2)),
                             ExhaustiveStrategy::per_cost(0.2, Cost::units(4))},
                            {1, 1}),
            0u);
  EXPECT_EQ(*argmax_allowed({0.1, 0.1, 0.1}, {0, 1, 1}), 1u);
  EXPECT_EQ(*argmax_allowed({0.5, 0.1, 0.9}, {0, 1, 0}), 1u);
  EXPECT_FALSE(argmax_allowed({0.5}, {0}).has_value());
  EXPECT_EQ(ExhaustiveStrategy::per_cost(0.3, Cost::units(0)), HUGE_VAL);
  EXPECT_EQ(ExhaustiveStrategy::per_cost(0.0, Cost::units(0)), 0.0);
}

TEST(Exhaustive, OneHotFeatureBinsByPattern) {
  std::vector<FeatureMeta> metas{{"r", FeatureKind::real, Category::laboratory, Cost::units(1), 1},
                                 {"c", FeatureKind::categorical, Category::demographics, Cost::units(1), 3}};
  Dataset d;
  d.catalog = FeatureCatalog(metas);
  for (int i = 0; i < 30; ++i) {
    std::vector<double> row{double(i), 0, 0, 0};
    row[1 + i % 3] = 1.0;
    d.rows.push_back(row);
    d.availability.push_back({1, Mask::value_type(i % 5 != 0)});
    d.labels.push_back(i % 2);
  }
  const TrainStore store(d, 10);
  const auto& fb = store.bins(1);
  EXPECT_EQ(fb.bin_value.size(), 3u);
  EXPECT_EQ(fb.bin_of_row[0], -1);
  for (const auto& v : fb.bin_value) EXPECT_EQ(std::accumulate(v.begin(), v.end(), 0.0), 1.0);
  const auto probs = conditional_bin_probabilities(store, AcquisitionState::start(d.catalog), 1, 50);
  EXPECT_NEAR(std::accumulate(probs.begin(), probs.end(), 0.0), 1.0, 1e-12);
}

TEST(Exhaustive, StaticOrderByEmptyStateScoreMatchesFirstChoice) {
  const auto train = synthetic::informative(400, 1, 5);
  auto data = train.with_catalog(train.catalog.with_costs({Cost::units(3), Cost::units(1), Cost::units(2),
                                                           Cost::units(1), Cost::units(4)}));
  ClassifierConfig cc;
  cc.epochs = 10;
  auto clf = std::make_shared<MaskedClassifier>(MaskedClassifier::train(data, cc, 2));
  auto store = std::make_shared<TrainStore>(data, 10);
  ExhaustiveStrategy ex(clf, store, data.catalog);
  const auto empty = AcquisitionState::start(data.catalog);
  const auto scores = ex.scores(empty, all_allowed(empty));
  std::vector<std::size_t> order(5);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  StaticOrderStrategy fixed(order);
  Rng rng(0);
  EXPECT_EQ(fixed.select(empty, all_allowed(empty), rng).feature, ex.select(empty, all_allowed(empty), rng).feature);
}

// ---- DAE and FACT ----

namespace {

nn::DenseNet zero_net(std::size_t in, std::size_t hidden, std::size_t out, nn::Activation head) {
  Rng rng(0);
  auto net = nn::DenseNet::mlp(in, {hidden}, out, head, 0.0, rng);
  for (auto& l : net.layers()) {
    std::fill(l.weight.begin(), l.weight.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  return net;
}

BinaryEncoder unit_encoder(std::size_t columns) {
  return BinaryEncoder(3, std::vector<double>(columns, -1.0), std::vector<double>(columns, 1.0));
}

}  // namespace

TEST(Dae, ZeroWeightsGiveHalfExceptAcquired) {
  const auto catalog = unit_catalog(2);
  const auto enc = unit_encoder(2);
  DenoisingAutoencoder dae(zero_net(6, 4, 6, nn::Activation::sigmoid), 0.5);
  const auto empty = AcquisitionState::start(catalog);
  for (double p : dae_missing_posteriors(dae, empty, catalog, enc)) EXPECT_EQ(p, 0.5);
  const auto s = query(empty, 1, 1.0, catalog);
  const auto post = dae_missing_posteriors(dae, s, catalog, enc);
  const auto bits = enc.encode_state(s, catalog);
  for (std::size_t b = 0; b < 3; ++b) EXPECT_EQ(post[b], 0.5);
  for (std::size_t b = 3; b < 6; ++b) {
    EXPECT_EQ(post[b], bits[b]);
    EXPECT_TRUE(post[b] == 0.0 || post[b] == 1.0);
  }
}

TEST(Dae, ValidatesShape) {
  EXPECT_EQ(code_of([] { DenoisingAutoencoder(zero_net(6, 4, 5, nn::Activation::sigmoid), 0.5); }),
            ErrorCode::invalid_network);
  EXPECT_EQ(code_of([] { DenoisingAutoencoder(zero_net(6, 4, 6, nn::Activation::identity), 0.5); }),
            ErrorCode::invalid_network);
}

TEST(Dae, LearnsCorrelatedFeature) {
  // f1 = f0 exactly: given f0 the autoencoder should recover f1's bits
  Dataset d;
  d.catalog = unit_catalog(2);
  Rng rng(8);
  for (int i = 0; i < 600; ++i) {
    const double v = rng.bernoulli(0.5) ? 0.9 : -0.9;
    d.rows.push_back({v, v});
    d.availability.push_back({1, 1});
    d.labels.push_back(v > 0);
  }
  const auto enc = BinaryEncoder::fit(d.catalog, d.rows, d.availability, 3);
  DaeConfig cfg;
  cfg.epochs = 60;
  cfg.adam.learning_rate = 0.01;
  const auto dae = DenoisingAutoencoder::train(d, enc, cfg, 2);
  const auto s = query(AcquisitionState::start(d.catalog), 0, 0.9, d.catalog);
  const auto post = dae_missing_posteriors(dae, s, d.catalog, enc);
  const auto truth = enc.encode(std::vector<double>{0.9, 0.9}, Mask{1, 1}, d.catalog);
  for (std::size_t b = 3; b < 6; ++b) EXPECT_NEAR(post[b], truth[b], 0.2) << b;
}

TEST(Fact, ConstantPredictorSelectsLowestUnacquired) {
  const auto catalog = unit_catalog(3);
  const auto enc = unit_encoder(3);
  FactModel model{std::make_shared<BinaryClassifier>(enc, catalog, zero_net(9, 4, 2, nn::Activation::softmax)),
                  std::make_shared<DenoisingAutoencoder>(zero_net(9, 4, 9, nn::Activation::sigmoid), 0.5)};
  FactStrategy fact(model, catalog);
  auto s = query(AcquisitionState::start(catalog), 0, 0.2, catalog);
  for (double v : fact_sensitivities(s, model, catalog)) EXPECT_EQ(v, 0.0);
  Rng rng(0);
  EXPECT_EQ(fact.select(s, all_allowed(s), rng).feature, 1u);
}

TEST(Fact, CheaperOfTwoIdenticalFeaturesWins) {
  const auto catalog = make_real_catalog({Cost::units(9), Cost::units(2)});
  const auto enc = unit_encoder(2);
  Rng rng(1);
  auto net = nn::DenseNet::mlp(6, {4}, 2, nn::Activation::softmax, 0.0, rng);
  auto& first = net.layers()[0];
  std::fill(first.bias.begin(), first.bias.end(), 1.0);  // keep every unit active
  for (std::size_t o = 0; o < first.out; ++o) {
    for (std::size_t b = 0; b < 3; ++b) first.weight[o * 6 + 3 + b] = first.weight[o * 6 + b];  // mirror f0 onto f1
  }
  FactModel model{std::make_shared<BinaryClassifier>(enc, catalog, net),
                  std::make_shared<DenoisingAutoencoder>(zero_net(6, 4, 6, nn::Activation::sigmoid), 0.5)};
  const auto s = AcquisitionState::start(catalog);
  const auto raw = fact_sensitivities(s, model, catalog);
  EXPECT_NEAR(raw[0], raw[1], 1e-12);
  EXPECT_GT(raw[0], 0.0);
  Rng r(0);
  EXPECT_EQ(FactStrategy(model, catalog).select(s, all_allowed(s), r).feature, 1u);
}

TEST(Fact, UntrainedModel) {
  const auto catalog = unit_catalog(2);
  const auto s = AcquisitionState::start(catalog);
  EXPECT_EQ(code_of([&] { fact_sensitivities(s, FactModel{}, catalog); }), ErrorCode::untrained_model);
}

TEST(Fact, SensitivityMatchesFiniteDifferences) {
  // the analytic input gradient used by FACT against a direct perturbation
  const auto catalog = unit_catalog(3);
  const auto enc = unit_encoder(3);
  Rng rng(6);
  auto net = nn::DenseNet::mlp(9, {6}, 2, nn::Activation::softmax, 0.0, rng);
  for (auto& l : net.layers()) {
    for (auto& w : l.weight) w += 0.3 * rng.normal();  // keep away from relu kinks is not needed at eval points
  }
  FactModel model{std::make_shared<BinaryClassifier>(enc, catalog, net),
                  std::make_shared<DenoisingAutoencoder>(zero_net(9, 4, 9, nn::Activation::sigmoid), 0.5)};
  const auto s = query(AcquisitionState::start(catalog), 2, 0.4, catalog);
  const auto raw = fact_sensitivities(s, model, catalog);
  const auto bits = enc.encode_state(s, catalog);
  const auto p = nn::predict(net, bits);
  const auto top = nn::argmax(p);
  for (std::size_t j = 0; j < 2; ++j) {
    double expected = 0.0;
    for (std::size_t b = j * 3; b < j * 3 + 3; ++b) {
      auto up = bits, down = bits;
      up[b] += 1e-6;
      down[b] -= 1e-6;
      const double g = (nn::predict(net, up)[top] - nn::predict(net, down)[top]) / 2e-6;
      expected += std::abs(g) * 0.5;
    }
    EXPECT_NEAR(raw[j], expected, 1e-6) << j;
  }
}

namespace {

// Label depends strongly on f0, weakly on f1, not at all on f2.
Dataset graded_task(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  d.catalog = unit_catalog(3);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row{rng.normal(), rng.normal(), rng.normal()};
    d.labels.push_back(row[0] + 0.4 * row[1] + 0.3 * rng.normal() > 0);
    d.rows.push_back(row);
    d.availability.push_back({1, 1, 1});
  }
  return d;
}

}  // namespace

TEST(Fact, AgreesWithExhaustiveOnMostStates) {
  const auto data = graded_task(2000, 21);
  ClassifierConfig cc;
  cc.epochs = 30;
  cc.dropout = 0.0;
  const auto enc = BinaryEncoder::fit(data.catalog, data.rows, data.availability, 3);
  auto masked = std::make_shared<MaskedClassifier>(MaskedClassifier::train(data, cc, 3));
  auto binary = std::make_shared<BinaryClassifier>(BinaryClassifier::train(data, enc, cc, 4));
  DaeConfig dc;
  dc.epochs = 30;
  auto dae = std::make_shared<DenoisingAutoencoder>(DenoisingAutoencoder::train(data, enc, dc, 5));
  ExhaustiveStrategy ex(masked, std::make_shared<TrainStore>(data, 10), data.catalog);
  FactStrategy fact({binary, dae}, data.catalog);

  Rng rng(77);
  const auto test = graded_task(200, 99);
  int agree = 0, total = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    auto s = AcquisitionState::start(data.catalog);
    const auto m = random_observation_mask(3, rng);
    for (std::size_t j = 0; j < 3; ++j) {
      if (m[j]) s = query_from_row(s, j, test.rows[i], data.catalog);
    }
    const auto allowed = all_allowed(s);
    if (std::count(allowed.begin(), allowed.end(), 1) < 2) continue;
    ++total;
    agree += ex.select(s, allowed, rng).feature == fact.select(s, allowed, rng).feature;
  }
  ASSERT_GT(total, 50);
  EXPECT_GE(double(agree) / total, 0.70) << agree << "/" << total;
}

TEST(CostScale, SelectionsInvariant) {
  const auto data = graded_task(800, 31);
  ClassifierConfig cc;
  cc.epochs = 10;
  const auto enc = BinaryEncoder::fit(data.catalog, data.rows, data.availability, 3);
  auto masked = std::make_shared<MaskedClassifier>(MaskedClassifier::train(data, cc, 1));
  auto binary = std::make_shared<BinaryClassifier>(BinaryClassifier::train(data, enc, cc, 2));
  DaeConfig dc;
  dc.epochs = 5;
  auto dae = std::make_shared<DenoisingAutoencoder>(DenoisingAutoencoder::train(data, enc, dc, 3));
  auto store = std::make_shared<TrainStore>(data, 10);
  const auto base = data.catalog.with_costs({Cost::units(2), Cost::units(5), Cost::units(1)});
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    auto s = AcquisitionState::start(base);
    const auto& row = data.rows[rng.index(data.size())];
    if (rng.bernoulli(0.5)) s = query_from_row(s, rng.index(3), row, base);
    const auto allowed = all_allowed(s);
    const auto ref_fact = FactStrategy({binary, dae}, base).select(s, allowed, rng).feature;
    const auto ref_ex = ExhaustiveStrategy(masked, store, base).select(s, allowed, rng).feature;
    for (double alpha : {0.5, 2.0, 10.0}) {
      const auto c = base.scaled(alpha);
      EXPECT_EQ(FactStrategy({binary, dae}, c).select(s, allowed, rng).feature, ref_fact);
      EXPECT_EQ(ExhaustiveStrategy(masked, store, c).select(s, allowed, rng).feature, ref_ex);
    }
  }
}

// ---- Q-learning plumbing ----

TEST(QLearning, EpsilonOneIsUniformOverLegal) {
  Rng rng(12);
  const std::vector<double> q{5.0, -1.0, 3.0, 0.0, 9.0};
  const Mask legal{1, 0, 1, 1, 1};
  std::map<std::size_t, int> counts;
  const int n = 40000;
  for (int i = 0; i < n; ++i) counts[epsilon_greedy(q, legal, 1.0, rng)]++;
  EXPECT_EQ(counts.count(1), 0u);
  const double p = 0.25, mean = n * p, sigma = std::sqrt(n * p * (1 - p));
  for (std::size_t a : {0u, 2u, 3u, 4u}) EXPECT_LE(std::abs(counts[a] - mean), 3 * sigma) << a;
  EXPECT_EQ(epsilon_greedy(q, legal, 0.0, rng), 4u);
}

TEST(QLearning, EpsilonSchedule) {
  QConfig c;
  c.episodes = 100;
  EXPECT_EQ(epsilon_at(c, 0), 1.0);
  EXPECT_NEAR(epsilon_at(c, 10), 0.525, 1e-12);
  EXPECT_EQ(epsilon_at(c, 20), 0.05);
  EXPECT_EQ(epsilon_at(c, 99), 0.05);
}

TEST(QLearning, NoUpdatesBeforeReplayWarmUp) {
  const auto data = synthetic::toy_mdp(50, 1);
  FunctionClassifier clf(2, [](const AcquisitionState&) { return std::vector<double>{0.5, 0.5}; });
  QConfig c;
  c.variant = QVariant::rl_based;
  c.episodes = 5;
  c.min_replay = 1000;
  c.hidden = {8};
  const auto result = train_q_strategy(data, clf, c, 42);
  EXPECT_EQ(result.updates, 0u);
  Rng rng(42);
  const auto initial = nn::DenseNet::mlp(6, {8}, 4, nn::Activation::identity, 0.0, rng);
  EXPECT_EQ(result.strategy->network(), initial);
}

TEST(QLearning, DivergenceIsReported) {
  const auto data = synthetic::toy_mdp(50, 1);
  FunctionClassifier clf(2, [](const AcquisitionState&) { return std::vector<double>{1.0, 0.0}; });
  QConfig c;
  c.variant = QVariant::rl_based;
  c.lambda = 1e300;
  c.episodes = 200;
  c.min_replay = 1;
  c.batch_size = 4;
  c.hidden = {4};
  EXPECT_EQ(code_of([&] { train_q_strategy(data, clf, c, 1); }), ErrorCode::diverged_q);
}

TEST(QLearning, ConfigValidation) {
  QConfig c;
  c.gamma = 1.5;
  EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::invalid_config);
  c = QConfig{};
  c.lambda = -1;
  EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::invalid_config);
}

TEST(QLearning, ToyMdpOracleSanity) {
  // the exact optimum the learner is compared against
  oracle::ToyMdp mdp;
  EXPECT_NEAR(mdp.value({0, 0, 0}), -1.0, 1e-12);  // buy feature 0, then predict
  const auto q = mdp.q_values({0, 0, 0});
  EXPECT_GT(q[0], q[1]);
  EXPECT_GT(q[0], q[3]);
  oracle::ToyMdp free_errors{0.0, 1.0};
  EXPECT_EQ(free_errors.value({0, 0, 0}), 0.0);  // lambda = 0: predict at once
  const auto q0 = free_errors.q_values({0, 0, 0});
  EXPECT_GT(q0[3], q0[0]);
}

TEST(QLearning, ToyMdpValueIterationAgreesWithRecursion) {
  for (double lambda : {0.0, 1.0, 5.0, 20.0}) {
    oracle::ToyMdp mdp{lambda, 1.0};
    const auto v = mdp.value_iteration();
    for (const auto& st : oracle::ToyMdp::all_states()) EXPECT_NEAR(v[oracle::ToyMdp::index(st)], mdp.value(st), 1e-12);
  }
}

TEST(QLearning, RlBasedLearnsToyMdpPolicy) {
  const auto data = synthetic::toy_mdp(2000, 5);
  FunctionClassifier bayes(2, [](const AcquisitionState& s) {
    if (!s.acquired[0]) return std::vector<double>{0.5, 0.5};
    return s.values[0] > 0 ? std::vector<double>{0.0, 1.0} : std::vector<double>{1.0, 0.0};
  });
  QConfig c;
  c.variant = QVariant::rl_based;
  c.lambda = 5.0;
  c.episodes = 3000;
  c.hidden = {32};
  c.adam.learning_rate = 3e-3;
  const auto result = train_q_strategy(data, bayes, c, 7);
  oracle::ToyMdp mdp;
  int match = 0, total = 0;
  for (const auto& st : oracle::ToyMdp::all_states()) {
    AcquisitionState s = AcquisitionState::start(data.catalog);
    for (std::size_t j = 0; j < 3; ++j) {
      if (st[j]) s = query(s, j, st[j] == 2 ? 1.0 : -1.0, data.catalog);
    }
    const auto q = mdp.q_values(st);
    const double best = *std::max_element(q.begin(), q.end());
    Mask legal = legal_actions(s, QVariant::rl_based);
    const auto a = *argmax_allowed(result.strategy->q_values(s), legal);
    ++total;
    match += q[a] >= best - 1e-9;
  }
  EXPECT_GE(double(match) / total, 0.95) << match << "/" << total;
}

// ---- episodes ----

TEST(Episode, ZeroBudgetAcquiresNothing) {
  const auto data = synthetic::informative(10, 1, 4);
  FunctionClassifier clf(2, [](const AcquisitionState& s) { return oracle::logistic_pair(s.values[0]); });
  RandomStrategy random;
  const auto r = run_episode(random, data.rows[0], data.labels[0], data.catalog, TerminationRule::budget(Cost{}), clf);
  EXPECT_TRUE(r.order.empty());
  EXPECT_EQ(r.total_cost, Cost{});
  EXPECT_EQ(r.prediction, clf.predict(AcquisitionState::start(data.catalog)));
}

TEST(Episode, AllAcquiredIsPermutationWithFullCost) {
  const auto base = synthetic::informative(10, 1, 4);
  const auto catalog = base.catalog.with_costs({Cost::units(2), Cost::units(4), Cost::units(5), Cost::units(9)});
  FunctionClassifier clf(2, [](const AcquisitionState& s) { return oracle::logistic_pair(s.values[0]); });
  RandomStrategy random;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    EpisodeOptions opt;
    opt.seed = seed;
    const auto r = run_episode(random, base.rows[seed % 10], base.labels[seed % 10], catalog,
                               TerminationRule::all_acquired(), clf, opt);
    auto order = r.order;
    std::sort(order.begin(), order.end());
    EXPECT_EQ(order, (std::vector<std::size_t>{0, 1, 2, 3}));
    EXPECT_EQ(r.total_cost, Cost::units(20));
  }
}

TEST(Episode, RandomRespectsBudgetAndLogReplays) {
  const auto base = synthetic::informative(50, 2, 6);
  const auto catalog = base.catalog.with_costs({Cost::units(2), Cost::units(4), Cost::units(5), Cost::units(9),
                                                Cost::parse("0.5"), Cost::units(3)});
  FunctionClassifier clf(2, [](const AcquisitionState& s) { return oracle::logistic_pair(s.values[1]); });
  RandomStrategy random;
  std::stringstream log;
  write_trajectory_header(log);
  std::vector<Cost> totals;
  for (std::size_t i = 0; i < 200; ++i) {
    EpisodeOptions opt;
    opt.seed = i;
    const Cost budget = Cost::units(static_cast<std::int64_t>(i % 15));
    const auto r = run_episode(random, base.rows[i % 50], base.labels[i % 50], catalog, TerminationRule::budget(budget),
                               clf, opt);
    EXPECT_LE(r.total_cost, budget);
    check_invariants(r.final_state, catalog);
    for (const auto& step : trajectory_of(r, i)) write_trajectory_step(log, step);
    totals.push_back(r.total_cost);
  }
  const auto replayed = replay_costs(read_trajectory(log));
  for (std::size_t i = 0; i < totals.size(); ++i) {
    const auto it = replayed.find(i);
    EXPECT_EQ(it == replayed.end() ? Cost{} : it->second, totals[i]);
  }
}

TEST(Episode, StaticOrderValidation) {
  EXPECT_EQ(code_of([] { StaticOrderStrategy({0, 0, 1}); }), ErrorCode::invalid_config);
  EXPECT_EQ(code_of([] { StaticOrderStrategy({0, 3}); }), ErrorCode::invalid_config);
}

TEST(Episode, OlStopsBelowThreshold) {
  const auto catalog = unit_catalog(2);
  auto q = zero_net(4, 2, 2, nn::Activation::identity);
  q.layers().back().bias = {-0.5, -0.1};
  QConfig c;
  QStrategy ol(QVariant::ol, q, c);
  Rng rng(0);
  const auto s = AcquisitionState::start(catalog);
  EXPECT_EQ(ol.select(s, all_allowed(s), rng).kind, Decision::Kind::stop);
  q.layers().back().bias = {-0.5, 0.1};
  QStrategy ol2(QVariant::ol, q, c);
  const auto d = ol2.select(s, all_allowed(s), rng);
  EXPECT_EQ(d.kind, Decision::Kind::acquire);
  EXPECT_EQ(d.feature, 1u);
}

TEST(Episode, RlPredictActionAndDisabledLimit) {
  const auto catalog = unit_catalog(2);
  auto q = zero_net(4, 2, 3, nn::Activation::identity);
  q.layers().back().bias = {-2.0, -1.5, -1.0};  // predict is best
  QStrategy rl(QVariant::rl_based, q, QConfig{});
  Rng rng(0);
  const auto s = AcquisitionState::start(catalog);
  EXPECT_EQ(rl.select(s, all_allowed(s), rng).kind, Decision::Kind::predict);
  rl.disable_predict(true);
  const auto d = rl.select(s, all_allowed(s), rng);
  EXPECT_EQ(d.kind, Decision::Kind::acquire);
  EXPECT_EQ(d.feature, 1u);
}
