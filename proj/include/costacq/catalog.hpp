#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "costacq/cost.hpp"
#include "costacq/csv.hpp"
#include "costacq/error.hpp"

namespace costacq {

enum class FeatureKind { real, categorical, multiple_choice, binary };

// Ordered as the four convenience-survey questions.
enum class Category { demographics, questionnaire, examination, laboratory };

inline constexpr std::array<Category, 4> kAllCategories = {
    Category::demographics, Category::questionnaire, Category::examination, Category::laboratory};

inline std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::real: return "real";
    case FeatureKind::categorical: return "categorical";
    case FeatureKind::multiple_choice: return "multiple-choice";
    case FeatureKind::binary: return "binary";
  }
  return "real";
}

inline std::string_view to_string(Category category) {
  switch (category) {
    case Category::demographics: return "demographics";
    case Category::questionnaire: return "questionnaire";
    case Category::examination: return "examination";
    case Category::laboratory: return "laboratory";
  }
  return "demographics";
}

inline FeatureKind parse_kind(std::string_view text) {
  if (text == "real") return FeatureKind::real;
  if (text == "categorical") return FeatureKind::categorical;
  if (text == "multiple-choice") return FeatureKind::multiple_choice;
  if (text == "binary") return FeatureKind::binary;
  fail(ErrorCode::parse_error, "unknown feature kind '" + std::string(text) + "'");
}

inline Category parse_category(std::string_view text) {
  for (auto c : kAllCategories) {
    if (to_string(c) == text) return c;
  }
  fail(ErrorCode::parse_error, "unknown category '" + std::string(text) + "'");
}

inline bool is_one_hot(FeatureKind kind) {
  return kind == FeatureKind::categorical || kind == FeatureKind::multiple_choice;
}

struct FeatureMeta {
  std::string name;
  FeatureKind kind = FeatureKind::real;
  Category category = Category::demographics;
  Cost cost;
  std::size_t encoded_width = 1;

  bool operator==(const FeatureMeta&) const = default;
};

// Per-feature metadata. One feature is one acquisition action, however many
// encoded columns it occupies.
class FeatureCatalog {
 public:
  FeatureCatalog() = default;
  explicit FeatureCatalog(std::vector<FeatureMeta> entries) : entries_(std::move(entries)) {
    validate();
  }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const FeatureMeta& operator[](std::size_t j) const { return entries_[j]; }
  const std::vector<FeatureMeta>& entries() const { return entries_; }
  bool operator==(const FeatureCatalog& other) const { return entries_ == other.entries_; }

  Cost cost(std::size_t j) const { return entries_.at(j).cost; }
  std::size_t offset(std::size_t j) const { return offsets_.at(j); }
  std::size_t width(std::size_t j) const { return entries_.at(j).encoded_width; }
  std::size_t encoded_width() const { return offsets_.empty() ? 0 : offsets_.back(); }

  std::vector<Cost> costs() const {
    std::vector<Cost> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.cost);
    return out;
  }

  std::size_t index_of(std::string_view name) const {
    for (std::size_t j = 0; j < entries_.size(); ++j) {
      if (entries_[j].name == name) return j;
    }
    fail(ErrorCode::index_out_of_range, "no feature named '" + std::string(name) + "'");
  }

  FeatureCatalog with_costs(const std::vector<Cost>& costs) const {
    if (costs.size() != entries_.size()) fail(ErrorCode::dimension_mismatch, "cost vector size");
    auto entries = entries_;
    for (std::size_t j = 0; j < entries.size(); ++j) entries[j].cost = costs[j];
    return FeatureCatalog(std::move(entries));
  }

  FeatureCatalog scaled(double factor) const {
    auto entries = entries_;
    for (auto& e : entries) e.cost = e.cost.scaled(factor);
    return FeatureCatalog(std::move(entries));
  }

  void write_csv(std::ostream& out) const {
    out << "name,kind,category,cost,encoded_width\n";
    for (const auto& e : entries_) {
      out << e.name << ',' << to_string(e.kind) << ',' << to_string(e.category) << ','
          << e.cost.str() << ',' << e.encoded_width << '\n';
    }
  }

  static FeatureCatalog read_csv(std::istream& in, const std::string& origin = "catalog") {
    const auto table = csv::parse(in, origin);
    const auto c_name = table.column("name"), c_kind = table.column("kind"),
               c_cat = table.column("category"), c_cost = table.column("cost"),
               c_width = table.column("encoded_width");
    std::vector<FeatureMeta> entries;
    for (const auto& row : table.rows) {
      FeatureMeta meta;
      meta.name = row[c_name];
      meta.kind = parse_kind(row[c_kind]);
      meta.category = parse_category(row[c_cat]);
      meta.cost = Cost::parse(row[c_cost]);
      const auto width = csv::parse_int(row[c_width]);
      if (width < 1) fail(ErrorCode::invalid_catalog, "encoded_width must be >= 1");
      meta.encoded_width = static_cast<std::size_t>(width);
      entries.push_back(std::move(meta));
    }
    return FeatureCatalog(std::move(entries));
  }

  static FeatureCatalog load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io_error, "cannot open '" + path + "'");
    return read_csv(in, path);
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::io_error, "cannot write '" + path + "'");
    write_csv(out);
  }

 private:
  void validate() {
    if (entries_.empty()) fail(ErrorCode::invalid_catalog, "catalog has no entries");
    std::unordered_set<std::string> names;
    offsets_.assign(1, 0);
    for (const auto& e : entries_) {
      if (e.name.empty()) fail(ErrorCode::invalid_catalog, "empty feature name");
      if (!names.insert(e.name).second) {
        fail(ErrorCode::invalid_catalog, "duplicate feature name '" + e.name + "'");
      }
      if (e.cost < Cost{}) fail(ErrorCode::invalid_catalog, "negative cost for '" + e.name + "'");
      if (e.encoded_width < 1) fail(ErrorCode::invalid_catalog, "zero encoded width for '" + e.name + "'");
      if (!is_one_hot(e.kind) && e.encoded_width != 1) {
        fail(ErrorCode::invalid_catalog, "scalar feature '" + e.name + "' must have encoded_width 1");
      }
      offsets_.push_back(offsets_.back() + e.encoded_width);
    }
  }

  std::vector<FeatureMeta> entries_;
  std::vector<std::size_t> offsets_;  // d + 1 prefix sums
};

// Catalog of d real features with the given integer costs; handy for synthetic tasks.
inline FeatureCatalog make_real_catalog(const std::vector<Cost>& costs,
                                        Category category = Category::examination) {
  std::vector<FeatureMeta> entries;
  for (std::size_t j = 0; j < costs.size(); ++j) {
    entries.push_back({"f" + std::to_string(j), FeatureKind::real, category, costs[j], 1});
  }
  return FeatureCatalog(std::move(entries));
}

}  // namespace costacq
