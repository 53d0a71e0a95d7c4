#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "costacq/dataset.hpp"
#include "costacq/rng.hpp"
#include "costacq/variable_table.hpp"

namespace costacq::synthetic {

inline Dataset make_dataset(std::string name, std::vector<Cost> costs, std::size_t classes) {
  Dataset d;
  d.task_name = std::move(name);
  d.num_classes = classes;
  d.catalog = make_real_catalog(costs);
  return d;
}

inline void push_row(Dataset& d, std::vector<double> row, int label) {
  d.availability.emplace_back(row.size(), 1);
  d.rows.push_back(std::move(row));
  d.labels.push_back(label);
}

// Eight standard-normal features; the label is whether feature 0 is positive.
inline Dataset informative(std::size_t n, std::uint64_t seed, std::size_t d = 8) {
  Rng rng(seed);
  auto data = make_dataset("informative", std::vector<Cost>(d, Cost::units(1)), 2);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(d);
    for (auto& v : row) v = rng.normal();
    push_row(data, row, row[0] > 0.0 ? 1 : 0);
  }
  return data;
}

// Feature 0 reveals the label and costs 9, feature 1 agrees with it 90% of
// the time and costs 1, the rest are noise at cost 1.
inline Dataset cost_tradeoff(std::size_t n, std::uint64_t seed, std::size_t noise = 6, double proxy_accuracy = 0.9) {
  Rng rng(seed);
  std::vector<Cost> costs{Cost::units(9), Cost::units(1)};
  costs.resize(2 + noise, Cost::units(1));
  auto data = make_dataset("cost_tradeoff", costs, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = rng.bernoulli(0.5) ? 1 : 0;
    const double sign = y ? 1.0 : -1.0;
    std::vector<double> row(2 + noise);
    row[0] = sign;
    row[1] = rng.bernoulli(proxy_accuracy) ? sign : -sign;
    for (std::size_t k = 2; k < row.size(); ++k) row[k] = rng.normal();
    push_row(data, row, y);
  }
  return data;
}

// Three fair coins encoded as +-1; the label copies the first.
inline Dataset toy_mdp(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  auto data = make_dataset("toy_mdp", std::vector<Cost>(3, Cost::units(1)), 2);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(3);
    for (auto& v : row) v = rng.bernoulli(0.5) ? 1.0 : -1.0;
    push_row(data, row, row[0] > 0.0 ? 1 : 0);
  }
  return data;
}

// Raw per-variable tables shaped like a small survey export: numeric codes,
// questionnaire skip patterns and partially missing lab panels. Enough signal
// for the diabetes, hypertension and heart tasks to be learnable.
inline std::vector<VariableTable> survey_tables(std::size_t subjects, std::uint64_t seed) {
  Rng rng(seed);
  struct Var {
    const char* name;
    Category category;
  };
  const std::vector<Var> vars{{"RIDAGEYR", Category::demographics}, {"RIAGENDR", Category::demographics},
                              {"RIDRETH1", Category::demographics}, {"INDFMPIR", Category::demographics},
                              {"DIQ010", Category::questionnaire},  {"SMQ020", Category::questionnaire},
                              {"PAQ650", Category::questionnaire},  {"SLD010H", Category::questionnaire},
                              {"MCQ160B", Category::questionnaire}, {"MCQ160C", Category::questionnaire},
                              {"MCQ160D", Category::questionnaire}, {"MCQ160E", Category::questionnaire},
                              {"BMXBMI", Category::examination},    {"BMXWAIST", Category::examination},
                              {"BPXSY1", Category::examination},    {"BPXDI1", Category::examination},
                              {"LBXGLU", Category::laboratory},     {"LBXGH", Category::laboratory},
                              {"LBXTC", Category::laboratory},      {"URXUMA", Category::laboratory}};
  std::vector<VariableTable> tables;
  for (const auto& v : vars) tables.push_back({v.name, v.category, {}, {}, std::nullopt});
  auto put = [&](std::size_t k, std::int64_t id, Cell value) {
    tables[k].subject_ids.push_back(id);
    tables[k].values.push_back(std::move(value));
  };
  auto clamp = [](double x, double lo, double hi) { return std::min(hi, std::max(lo, x)); };
  auto round1 = [](double x) { return std::round(x * 10.0) / 10.0; };

  for (std::size_t s = 0; s < subjects; ++s) {
    const auto id = static_cast<std::int64_t>(10000 + s);
    const double age = std::floor(rng.uniform(18.0, 80.0));
    const int sex = rng.bernoulli(0.5) ? 1 : 2;
    const int eth = 1 + static_cast<int>(rng.index(5));
    const double pir = round1(clamp(2.5 + 1.5 * rng.normal(), 0.0, 5.0));
    const double bmi = round1(clamp(27.0 + 0.05 * (age - 45.0) + 5.0 * rng.normal(), 15.0, 60.0));
    const double waist = round1(clamp(40.0 + 2.2 * bmi + 6.0 * rng.normal(), 55.0, 170.0));
    const bool smoker = rng.bernoulli(0.25 + 0.1 * (sex == 1));
    const bool active = rng.bernoulli(clamp(0.55 - 0.01 * (bmi - 27.0) - 0.004 * (age - 45.0), 0.05, 0.95));
    const double metabolic = 0.03 * (age - 45.0) + 0.12 * (bmi - 27.0) + (active ? -0.4 : 0.2) + rng.normal();
    const double glucose = std::round(clamp(100.0 + 12.0 * metabolic + 6.0 * rng.normal(), 60.0, 400.0));
    const double a1c = round1(clamp(5.4 + 0.025 * (glucose - 100.0) + 0.2 * rng.normal(), 4.0, 14.0));
    const double systolic =
        std::round(clamp(118.0 + 0.45 * (age - 45.0) + 0.6 * (bmi - 27.0) + 5.0 * smoker + 12.0 * rng.normal(), 80.0, 220.0));
    const double diastolic = std::round(clamp(45.0 + 0.25 * systolic + 8.0 * rng.normal(), 30.0, 120.0));
    const double chol = std::round(clamp(190.0 + 0.4 * (age - 45.0) + 35.0 * rng.normal(), 90.0, 400.0));
    const double albumin = round1(clamp(std::exp(2.0 + 0.03 * (systolic - 120.0) + 0.8 * rng.normal()), 0.2, 3000.0));
    const double cardiac = -4.2 + 0.06 * (age - 45.0) + 0.9 * smoker + 0.02 * (systolic - 120.0) + 0.3 * rng.normal();
    const double p_heart = 1.0 / (1.0 + std::exp(-cardiac));

    put(0, id, age);
    put(1, id, double(sex));
    put(2, id, double(eth));
    if (rng.bernoulli(0.9)) put(3, id, pir);
    put(4, id, glucose > 125.0 && rng.bernoulli(0.6) ? 1.0 : (rng.bernoulli(0.03) ? 3.0 : 2.0));
    put(5, id, smoker ? 1.0 : 2.0);
    put(6, id, active ? 1.0 : 2.0);
    put(7, id, std::round(clamp(7.0 + rng.normal(), 3.0, 12.0)));
    const bool history_asked = age >= 20.0;  // mimics a questionnaire skip pattern
    for (std::size_t k = 8; k < 12; ++k) {
      if (!history_asked) continue;
      if (rng.bernoulli(0.03)) {
        put(k, id, 9.0);  // don't know
        continue;
      }
      put(k, id, rng.bernoulli(p_heart) ? 1.0 : 2.0);
    }
    if (rng.bernoulli(0.95)) put(12, id, bmi);
    if (rng.bernoulli(0.92)) put(13, id, waist);
    if (rng.bernoulli(0.9)) {
      put(14, id, systolic);
      put(15, id, diastolic);
    }
    const bool fasting = rng.bernoulli(0.85);  // fasting subsample carries glucose
    if (fasting) put(16, id, glucose);
    if (rng.bernoulli(0.8)) put(17, id, a1c);
    if (rng.bernoulli(0.8)) put(18, id, chol);
    if (rng.bernoulli(0.55)) put(19, id, albumin);
  }
  return tables;
}

// Per-variable tables for a synthetic dataset: features become X0..X{d-1}
// in the given categories and the label becomes `label_name`. Subject ids
// start at 1.
inline std::vector<VariableTable> tables_from_dataset(const Dataset& d, const std::vector<Category>& categories,
                                                      const std::string& label_name = "Y") {
  if (categories.size() != d.catalog.size()) fail(ErrorCode::dimension_mismatch, "one category per feature");
  std::vector<VariableTable> tables;
  for (std::size_t j = 0; j < d.catalog.size(); ++j) {
    tables.push_back({"X" + std::to_string(j), categories[j], {}, {}, std::nullopt});
  }
  tables.push_back({label_name, Category::laboratory, {}, {}, std::nullopt});
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto id = static_cast<std::int64_t>(i + 1);
    for (std::size_t j = 0; j < d.catalog.size(); ++j) {
      if (!d.availability[i][j]) continue;
      tables[j].subject_ids.push_back(id);
      tables[j].values.emplace_back(d.rows[i][d.catalog.offset(j)]);
    }
    tables.back().subject_ids.push_back(id);
    tables.back().values.emplace_back(static_cast<double>(d.labels[i]));
  }
  return tables;
}

}  // namespace costacq::synthetic
