#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numeric>
#include <vector>

#include "costacq/binning.hpp"
#include "costacq/classifier.hpp"
#include "costacq/dataset.hpp"
#include "costacq/strategy.hpp"

namespace costacq {

// Reference rows for conditional value distributions, with every feature's
// observed values pre-assigned to equal-frequency bins.
class TrainStore {
 public:
  struct FeatureBins {
    std::vector<int> bin_of_row;                 // -1 where the feature is unobserved
    std::vector<std::vector<double>> bin_value;  // encoded representative per bin
  };

  TrainStore(const Dataset& data, std::size_t bins) : catalog_(data.catalog), rows_(data.rows) {
    if (bins == 0) fail(ErrorCode::invalid_config, "bin count must be >= 1");
    for (std::size_t j = 0; j < catalog_.size(); ++j) features_.push_back(bin_feature(data, j, bins));
    for (const auto& a : data.availability) availability_.push_back(a);
  }

  std::size_t size() const { return rows_.size(); }
  const FeatureCatalog& catalog() const { return catalog_; }
  const std::vector<std::vector<double>>& rows() const { return rows_; }
  const std::vector<Mask>& availability() const { return availability_; }
  const FeatureBins& bins(std::size_t j) const { return features_.at(j); }

 private:
  // Scalar features: Q equal-frequency bins over sorted observed values, tied
  // values kept together; the representative is the bin mean. One-hot
  // features: one bin per distinct observed pattern.
  static FeatureBins bin_feature(const Dataset& data, std::size_t j, std::size_t bins) {
    const auto& catalog = data.catalog;
    const auto off = catalog.offset(j), width = catalog.width(j);
    FeatureBins fb;
    fb.bin_of_row.assign(data.size(), -1);
    if (width > 1) {
      std::map<std::vector<double>, int> patterns;
      for (std::size_t i = 0; i < data.size(); ++i) {
        if (!data.availability[i][j]) continue;
        std::vector<double> key(data.rows[i].begin() + off, data.rows[i].begin() + off + width);
        patterns.emplace(key, 0);
      }
      int next = 0;
      for (auto& [key, id] : patterns) {
        id = next++;
        fb.bin_value.push_back(key);
      }
      for (std::size_t i = 0; i < data.size(); ++i) {
        if (!data.availability[i][j]) continue;
        std::vector<double> key(data.rows[i].begin() + off, data.rows[i].begin() + off + width);
        fb.bin_of_row[i] = patterns.at(key);
      }
      return fb;
    }
    std::vector<std::size_t> observed;
    std::vector<double> values;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (!data.availability[i][j]) continue;
      observed.push_back(i);
      values.push_back(data.rows[i][off]);
    }
    const auto assigned = equal_frequency_bins(values, bins);
    const auto count = assigned.empty() ? 0 : static_cast<std::size_t>(*std::max_element(assigned.begin(), assigned.end())) + 1;
    std::vector<double> sums(count, 0.0);
    std::vector<std::size_t> counts(count, 0);
    for (std::size_t r = 0; r < observed.size(); ++r) {
      fb.bin_of_row[observed[r]] = assigned[r];
      sums[static_cast<std::size_t>(assigned[r])] += values[r];
      counts[static_cast<std::size_t>(assigned[r])] += 1;
    }
    for (std::size_t b = 0; b < count; ++b) fb.bin_value.push_back({sums[b] / static_cast<double>(counts[b])});
    return fb;
  }

  FeatureCatalog catalog_;
  std::vector<std::vector<double>> rows_;
  std::vector<Mask> availability_;
  std::vector<FeatureBins> features_;
};

struct ExhaustiveConfig {
  std::size_t bins = 10;       // Q
  std::size_t neighbors = 50;  // K
};

// p(x_j in bin | acquired part of the state): bin frequencies among the K
// nearest reference rows (Euclidean over acquired columns) that observe j;
// marginal frequencies when nothing is acquired.
inline std::vector<double> conditional_bin_probabilities(const TrainStore& store, const AcquisitionState& state,
                                                         std::size_t j, std::size_t neighbors) {
  const auto& catalog = store.catalog();
  const auto& fb = store.bins(j);
  std::vector<double> probs(fb.bin_value.size(), 0.0);
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (fb.bin_of_row[i] >= 0) candidates.push_back(i);
  }
  if (candidates.empty()) return probs;
  std::vector<std::size_t> columns;
  for (std::size_t f = 0; f < catalog.size(); ++f) {
    if (!state.acquired[f]) continue;
    for (auto c = catalog.offset(f); c < catalog.offset(f) + catalog.width(f); ++c) columns.push_back(c);
  }
  std::vector<std::size_t> chosen;
  if (columns.empty()) {
    chosen = std::move(candidates);
  } else {
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(candidates.size());
    for (auto i : candidates) {
      double s = 0.0;
      for (auto c : columns) {
        const double diff = store.rows()[i][c] - state.values[c];
        s += diff * diff;
      }
      dist.emplace_back(s, i);
    }
    const auto k = std::min(neighbors, dist.size());
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    for (std::size_t r = 0; r < k; ++r) chosen.push_back(dist[r].second);
  }
  for (auto i : chosen) probs[static_cast<std::size_t>(fb.bin_of_row[i])] += 1.0;
  for (auto& p : probs) p /= static_cast<double>(chosen.size());
  return probs;
}

inline double l1_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[k]);
  return s;
}

// Expected L1 change of the class-probability vector from revealing feature j.
inline double exhaustive_utility(const AcquisitionState& state, std::size_t j, const Classifier& predictor,
                                 const TrainStore& store, const ExhaustiveConfig& config) {
  if (store.size() == 0) fail(ErrorCode::empty_store, "reference store has no rows");
  if (j >= state.num_features()) fail(ErrorCode::index_out_of_range, "feature " + std::to_string(j));
  if (state.acquired[j]) fail(ErrorCode::already_acquired, "feature " + std::to_string(j));
  const auto& catalog = store.catalog();
  const auto before = predictor.probabilities(state);
  const auto probs = conditional_bin_probabilities(store, state, j, config.neighbors);
  const auto& fb = store.bins(j);
  double expected = 0.0;
  for (std::size_t b = 0; b < probs.size(); ++b) {
    if (probs[b] == 0.0) continue;
    const auto after = predictor.probabilities(query(state, j, fb.bin_value[b], catalog));
    expected += probs[b] * l1_distance(before, after);
  }
  return expected;
}

class ExhaustiveStrategy : public Strategy {
 public:
  ExhaustiveStrategy(std::shared_ptr<const Classifier> predictor, std::shared_ptr<const TrainStore> store,
                     FeatureCatalog catalog, ExhaustiveConfig config = {})
      : predictor_(std::move(predictor)), store_(std::move(store)), catalog_(std::move(catalog)), config_(config) {}

  std::string name() const override { return "exhaustive"; }
  const ExhaustiveConfig& config() const { return config_; }

  // Utility per unit cost for each allowed feature (0 elsewhere).
  std::vector<double> scores(const AcquisitionState& state, const Mask& allowed) const {
    std::vector<double> out(state.num_features(), 0.0);
    for (std::size_t j = 0; j < out.size(); ++j) {
      if (!allowed[j]) continue;
      out[j] = per_cost(exhaustive_utility(state, j, *predictor_, *store_, config_), catalog_.cost(j));
    }
    return out;
  }

  Decision select(const AcquisitionState& state, const Mask& allowed, Rng&) const override {
    const auto best = argmax_allowed(scores(state, allowed), allowed);
    return best ? Decision::acquire(*best) : Decision::stop();
  }

  static double per_cost(double utility, Cost cost) {
    return cost.micros() == 0 ? (utility > 0.0 ? HUGE_VAL : 0.0) : utility / cost.to_double();
  }

 private:
  std::shared_ptr<const Classifier> predictor_;
  std::shared_ptr<const TrainStore> store_;
  FeatureCatalog catalog_;
  ExhaustiveConfig config_;
};

}  // namespace costacq
