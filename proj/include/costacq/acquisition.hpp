#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "costacq/catalog.hpp"
#include "costacq/cost.hpp"
#include "costacq/error.hpp"

namespace costacq {

using Mask = std::vector<std::uint8_t>;

// Partially observed instance. `values` holds the encoded columns (one per
// catalog column); unacquired columns are 0, which is the training mean after
// standardization. Masks are per feature.
struct AcquisitionState {
  std::vector<double> values;
  Mask initial;   // k0
  Mask acquired;  // k
  Cost spent;
  std::size_t step = 0;

  std::size_t num_features() const { return acquired.size(); }
  bool has(std::size_t j) const { return acquired.at(j) != 0; }

  // Empty state, optionally with free-at-start features copied from `row`.
  static AcquisitionState start(const FeatureCatalog& catalog, std::span<const double> row = {},
                                std::span<const std::uint8_t> free_at_start = {}) {
    AcquisitionState s;
    const auto d = catalog.size();
    s.values.assign(catalog.encoded_width(), 0.0);
    s.initial.assign(d, 0);
    s.acquired.assign(d, 0);
    if (free_at_start.empty()) return s;
    if (free_at_start.size() != d) fail(ErrorCode::dimension_mismatch, "k0 length != d");
    if (row.size() != catalog.encoded_width()) fail(ErrorCode::dimension_mismatch, "row width");
    for (std::size_t j = 0; j < d; ++j) {
      if (!free_at_start[j]) continue;
      s.initial[j] = s.acquired[j] = 1;
      for (std::size_t c = 0; c < catalog.width(j); ++c) {
        s.values[catalog.offset(j) + c] = row[catalog.offset(j) + c];
      }
    }
    return s;
  }

  friend bool operator==(const AcquisitionState&, const AcquisitionState&) = default;
};

inline void check_dimensions(const AcquisitionState& state, const FeatureCatalog& catalog) {
  if (state.acquired.size() != catalog.size() || state.initial.size() != catalog.size() ||
      state.values.size() != catalog.encoded_width()) {
    fail(ErrorCode::dimension_mismatch, "state has " + std::to_string(state.acquired.size()) +
                                            " features, catalog has " + std::to_string(catalog.size()));
  }
}

// (k - k0)^T c, recomputed from the masks.
inline Cost total_cost(const AcquisitionState& state, const FeatureCatalog& catalog) {
  check_dimensions(state, catalog);
  Cost total;
  for (std::size_t j = 0; j < catalog.size(); ++j) {
    if (state.acquired[j] && !state.initial[j]) total += catalog.cost(j);
  }
  return total;
}

// Purchases feature j with its encoded value(s); returns the successor state.
inline AcquisitionState query(const AcquisitionState& state, std::size_t j,
                              std::span<const double> encoded_value, const FeatureCatalog& catalog) {
  check_dimensions(state, catalog);
  if (j >= catalog.size()) {
    fail(ErrorCode::index_out_of_range,
         "feature " + std::to_string(j) + " >= " + std::to_string(catalog.size()));
  }
  if (state.acquired[j]) fail(ErrorCode::already_acquired, "feature " + std::to_string(j));
  if (encoded_value.size() != catalog.width(j)) {
    fail(ErrorCode::dimension_mismatch, "value width for feature " + std::to_string(j));
  }
  AcquisitionState next = state;
  next.acquired[j] = 1;
  for (std::size_t c = 0; c < encoded_value.size(); ++c) {
    next.values[catalog.offset(j) + c] = encoded_value[c];
  }
  next.spent += catalog.cost(j);
  next.step += 1;
  return next;
}

inline AcquisitionState query(const AcquisitionState& state, std::size_t j, double value,
                              const FeatureCatalog& catalog) {
  return query(state, j, std::span<const double>(&value, 1), catalog);
}

// Acquires feature j taking its value from a full encoded row.
inline AcquisitionState query_from_row(const AcquisitionState& state, std::size_t j,
                                       std::span<const double> row, const FeatureCatalog& catalog) {
  if (j >= catalog.size()) fail(ErrorCode::index_out_of_range, "feature " + std::to_string(j));
  return query(state, j, row.subspan(catalog.offset(j), catalog.width(j)), catalog);
}

inline std::vector<std::size_t> available_actions(const AcquisitionState& state) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < state.acquired.size(); ++j) {
    if (!state.acquired[j]) out.push_back(j);
  }
  return out;
}

class TerminationRule {
 public:
  enum class Kind { budget, confidence, all_acquired, composite };

  static TerminationRule budget(Cost limit) {
    if (limit < Cost{}) fail(ErrorCode::invalid_rule, "budget must be >= 0");
    TerminationRule r(Kind::budget);
    r.budget_ = limit;
    return r;
  }
  static TerminationRule unlimited() { return budget(Cost::unlimited()); }
  static TerminationRule confidence(double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
      fail(ErrorCode::invalid_rule, "confidence threshold must lie in [0,1]");
    }
    TerminationRule r(Kind::confidence);
    r.threshold_ = threshold;
    return r;
  }
  static TerminationRule all_acquired() { return TerminationRule(Kind::all_acquired); }
  static TerminationRule any_of(std::vector<TerminationRule> rules) {
    TerminationRule r(Kind::composite);
    r.children_ = std::move(rules);
    return r;
  }

  Kind kind() const { return kind_; }
  Cost budget_limit() const { return budget_; }
  double threshold() const { return threshold_; }
  const std::vector<TerminationRule>& children() const { return children_; }

  bool uses_certainty() const {
    if (kind_ == Kind::confidence) return true;
    for (const auto& c : children_) {
      if (c.uses_certainty()) return true;
    }
    return false;
  }

  // Whether buying feature j keeps every budget in the rule satisfied. A cost
  // landing exactly on the budget is allowed.
  bool affordable(const AcquisitionState& state, std::size_t j, const FeatureCatalog& catalog) const {
    switch (kind_) {
      case Kind::budget: return state.spent + catalog.cost(j) <= budget_;
      case Kind::composite:
        for (const auto& c : children_) {
          if (!c.affordable(state, j, catalog)) return false;
        }
        return true;
      default: return true;
    }
  }

  std::string describe() const {
    switch (kind_) {
      case Kind::budget: return "budget(" + budget_.str() + ")";
      case Kind::confidence: return "confidence(" + std::to_string(threshold_) + ")";
      case Kind::all_acquired: return "all-acquired";
      case Kind::composite: {
        std::string s = "any-of(";
        for (std::size_t i = 0; i < children_.size(); ++i) s += (i ? "," : "") + children_[i].describe();
        return s + ")";
      }
    }
    return "";
  }

 private:
  explicit TerminationRule(Kind kind) : kind_(kind) {}

  Kind kind_;
  Cost budget_;
  double threshold_ = 1.0;
  std::vector<TerminationRule> children_;
};

inline bool is_terminal(const AcquisitionState& state, const TerminationRule& rule, double certainty,
                        const FeatureCatalog& catalog) {
  using Kind = TerminationRule::Kind;
  switch (rule.kind()) {
    case Kind::budget: {
      const auto remaining = available_actions(state);
      if (remaining.empty()) return true;
      Cost cheapest = catalog.cost(remaining.front());
      for (auto j : remaining) cheapest = std::min(cheapest, catalog.cost(j));
      return state.spent + cheapest > rule.budget_limit();
    }
    case Kind::confidence: return certainty >= rule.threshold();
    case Kind::all_acquired: return available_actions(state).empty();
    case Kind::composite:
      for (const auto& child : rule.children()) {
        if (is_terminal(state, child, certainty, catalog)) return true;
      }
      return false;
  }
  return false;
}

// Throws if any state invariant is broken; used by interactive sessions and tests.
inline void check_invariants(const AcquisitionState& state, const FeatureCatalog& catalog) {
  check_dimensions(state, catalog);
  for (std::size_t j = 0; j < catalog.size(); ++j) {
    if (state.initial[j] && !state.acquired[j]) {
      fail(ErrorCode::invalid_config, "mask shrank below k0 at feature " + std::to_string(j));
    }
    if (!state.acquired[j]) {
      for (std::size_t c = 0; c < catalog.width(j); ++c) {
        if (state.values[catalog.offset(j) + c] != 0.0) {
          fail(ErrorCode::invalid_config, "unacquired feature " + std::to_string(j) + " has a value");
        }
      }
    }
  }
  if (state.spent != total_cost(state, catalog)) {
    fail(ErrorCode::invalid_config, "spent " + state.spent.str() + " != (k-k0).c " +
                                        total_cost(state, catalog).str());
  }
}

}  // namespace costacq
