#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include "costacq/catalog.hpp"
#include "costacq/csv.hpp"
#include "costacq/error.hpp"

namespace costacq {

// missing | numeric value | categorical code
using Cell = std::variant<std::monostate, double, std::string>;

inline bool is_missing(const Cell& c) { return std::holds_alternative<std::monostate>(c); }

inline std::optional<double> cell_number(const Cell& c) {
  if (const auto* v = std::get_if<double>(&c)) return *v;
  return std::nullopt;
}

// Categorical view of a cell; integral numbers print without a fraction.
inline std::optional<std::string> cell_code(const Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  if (const auto* v = std::get_if<double>(&c)) {
    if (std::floor(*v) == *v && std::abs(*v) < 1e15) return std::to_string(static_cast<long long>(*v));
    return csv::format_double(*v);
  }
  return std::nullopt;
}

inline Cell parse_cell(const std::string& text) {
  if (text.empty() || text == "." || text == "NA") return std::monostate{};
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() + text.size() && std::isfinite(v)) return v;
  return text;
}

// One raw variable: a value per subject.
struct VariableTable {
  std::string variable_id;
  std::optional<Category> category;
  std::vector<std::int64_t> subject_ids;
  std::vector<Cell> values;
  std::optional<FeatureKind> declared_kind;

  std::size_t size() const { return subject_ids.size(); }

  void validate() const {
    if (subject_ids.size() != values.size()) {
      fail(ErrorCode::dimension_mismatch, variable_id + ": subject and value counts differ");
    }
    std::unordered_set<std::int64_t> seen;
    for (auto id : subject_ids) {
      if (!seen.insert(id).second) {
        fail(ErrorCode::parse_error, variable_id + ": duplicate subject " + std::to_string(id));
      }
    }
  }

  void write_csv(std::ostream& out) const {
    out << "subject_id,value\n";
    for (std::size_t i = 0; i < size(); ++i) {
      out << subject_ids[i] << ',';
      if (const auto* v = std::get_if<double>(&values[i])) out << csv::format_double(*v);
      else if (const auto* s = std::get_if<std::string>(&values[i])) out << *s;
      out << '\n';
    }
  }

  static VariableTable read_csv(std::istream& in, const std::string& variable_id, const std::string& origin) {
    const auto table = csv::parse(in, origin);
    const auto c_id = table.column("subject_id"), c_value = table.column("value");
    VariableTable out;
    out.variable_id = variable_id;
    for (const auto& row : table.rows) {
      out.subject_ids.push_back(csv::parse_int(row[c_id]));
      out.values.push_back(parse_cell(row[c_value]));
    }
    out.validate();
    return out;
  }
};

// Reads `<root>/<category>/<VARIABLE>.csv` for the four categories, in
// name order. Unknown subdirectories are ignored.
inline std::vector<VariableTable> load_variable_dir(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) fail(ErrorCode::io_error, "not a directory: " + root.string());
  std::vector<VariableTable> out;
  for (auto category : kAllCategories) {
    const auto dir = root / std::string(to_string(category));
    if (!fs::is_directory(dir)) continue;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& path : files) {
      std::ifstream in(path);
      if (!in) fail(ErrorCode::io_error, "cannot open " + path.string());
      auto table = VariableTable::read_csv(in, path.stem().string(), path.string());
      table.category = category;
      out.push_back(std::move(table));
    }
  }
  return out;
}

inline void save_variable_table(const std::filesystem::path& root, const VariableTable& table) {
  namespace fs = std::filesystem;
  const auto dir = root / std::string(to_string(table.category.value_or(Category::questionnaire)));
  fs::create_directories(dir);
  const auto path = dir / (table.variable_id + ".csv");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io_error, "cannot write " + path.string());
  table.write_csv(out);
}

// Declared kind if given; otherwise string codes or few distinct integers mean
// categorical, two distinct values mean binary, anything else is real.
inline FeatureKind infer_kind(const VariableTable& table, std::size_t max_categories = 10) {
  if (table.declared_kind) return *table.declared_kind;
  std::set<double> distinct;
  bool all_integral = true;
  for (const auto& c : table.values) {
    if (std::holds_alternative<std::string>(c)) return FeatureKind::categorical;
    if (const auto* v = std::get_if<double>(&c)) {
      all_integral = all_integral && std::floor(*v) == *v;
      if (distinct.size() <= max_categories) distinct.insert(*v);
    }
  }
  if (distinct.size() <= 2) return FeatureKind::binary;
  if (all_integral && distinct.size() <= max_categories) return FeatureKind::categorical;
  return FeatureKind::real;
}

}  // namespace costacq
