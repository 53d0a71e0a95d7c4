#pragma once

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "costacq/catalog.hpp"
#include "costacq/csv.hpp"
#include "costacq/error.hpp"

namespace costacq {

// Convenience ratings 1..10 (10 = most convenient) for demographics,
// life-style questions, examinations and lab tests, in that order.
struct SurveyResponse {
  std::array<int, 4> answers{};

  void validate() const {
    for (int a : answers) {
      if (a < 1 || a > 10) fail(ErrorCode::out_of_range, "survey answer " + std::to_string(a) + " outside [1,10]");
    }
  }
};

// Per-question median; for an even count the lower median.
inline std::array<int, 4> aggregate_medians(const std::vector<SurveyResponse>& responses) {
  if (responses.empty()) fail(ErrorCode::empty_survey, "no survey responses");
  std::array<int, 4> medians{};
  for (std::size_t q = 0; q < 4; ++q) {
    std::vector<int> column;
    for (const auto& r : responses) {
      r.validate();
      column.push_back(r.answers[q]);
    }
    std::sort(column.begin(), column.end());
    medians[q] = column[(column.size() + 1) / 2 - 1];
  }
  return medians;
}

inline int convenience_to_cost(int median) {
  if (median < 1 || median > 10) fail(ErrorCode::out_of_range, "convenience " + std::to_string(median));
  return 11 - median;
}

class CostTable {
 public:
  CostTable() = default;
  explicit CostTable(std::map<Category, int> costs) : costs_(std::move(costs)) {
    for (auto c : kAllCategories) {
      const auto it = costs_.find(c);
      if (it == costs_.end()) fail(ErrorCode::unmapped_category, std::string(to_string(c)) + " missing");
      if (it->second < 1 || it->second > 10) fail(ErrorCode::out_of_range, "cost outside [1,10]");
    }
  }

  static CostTable from_medians(const std::array<int, 4>& medians) {
    std::map<Category, int> costs;
    for (std::size_t q = 0; q < 4; ++q) costs[kAllCategories[q]] = convenience_to_cost(medians[q]);
    return CostTable(std::move(costs));
  }

  static CostTable from_survey(const std::vector<SurveyResponse>& responses) {
    return from_medians(aggregate_medians(responses));
  }

  // Medians 9, 7, 6, 2 reproduce the published costs 2, 4, 5, 9.
  static CostTable reference() { return from_medians({9, 7, 6, 2}); }

  int cost(Category c) const {
    const auto it = costs_.find(c);
    if (it == costs_.end()) fail(ErrorCode::unmapped_category, std::string(to_string(c)));
    return it->second;
  }

  const std::map<Category, int>& costs() const { return costs_; }

  void write_csv(std::ostream& out) const {
    out << "category,cost\n";
    for (auto c : kAllCategories) out << to_string(c) << ',' << cost(c) << '\n';
  }

  static CostTable read_csv(std::istream& in, const std::string& origin = "cost table") {
    const auto t = csv::parse(in, origin);
    const auto c_cat = t.column("category"), c_cost = t.column("cost");
    std::map<Category, int> costs;
    for (const auto& row : t.rows) costs[parse_category(row[c_cat])] = static_cast<int>(csv::parse_int(row[c_cost]));
    return CostTable(std::move(costs));
  }

 private:
  std::map<Category, int> costs_;
};

// Each feature takes its category's cost; nothing else changes.
inline FeatureCatalog assign_costs(const FeatureCatalog& catalog, const CostTable& table) {
  if (catalog.empty()) return catalog;
  std::vector<Cost> costs;
  for (const auto& e : catalog.entries()) costs.push_back(Cost::units(table.cost(e.category)));
  return catalog.with_costs(costs);
}

// `respondent_id,q1,q2,q3,q4`
inline std::vector<SurveyResponse> read_survey_csv(std::istream& in, const std::string& origin = "survey") {
  const auto t = csv::parse(in, origin);
  const std::array<std::size_t, 4> cols{t.column("q1"), t.column("q2"), t.column("q3"), t.column("q4")};
  t.column("respondent_id");
  std::vector<SurveyResponse> out;
  for (const auto& row : t.rows) {
    SurveyResponse r;
    for (std::size_t q = 0; q < 4; ++q) r.answers[q] = static_cast<int>(csv::parse_int(row[cols[q]]));
    r.validate();
    out.push_back(r);
  }
  return out;
}

inline std::vector<SurveyResponse> load_survey(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open '" + path + "'");
  return read_survey_csv(in, path);
}

}  // namespace costacq
