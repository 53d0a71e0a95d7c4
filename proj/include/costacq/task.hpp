#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "costacq/costs.hpp"
#include "costacq/dataset.hpp"
#include "costacq/labels.hpp"
#include "costacq/preprocess.hpp"
#include "costacq/rng.hpp"
#include "costacq/variable_table.hpp"

namespace costacq {

struct TaskDefinition {
  std::string name;
  std::size_t num_classes = 2;
  std::vector<std::string> target_variables;
  // Receives the target variables' cells in declaration order.
  std::function<std::optional<int>(const std::vector<Cell>&)> label;
  std::vector<std::string> features;  // explicit list; empty selects automatically
};

inline TaskDefinition diabetes_task() {
  return {"diabetes", 3, {"LBXGLU"}, [](const std::vector<Cell>& v) -> std::optional<int> {
            const auto g = cell_number(v.at(0));
            if (!g) return std::nullopt;
            return label_diabetes(*g);
          }, {}};
}

inline TaskDefinition hypertension_task() {
  return {"hypertension", 2, {"BPXSY1"}, [](const std::vector<Cell>& v) -> std::optional<int> {
            const auto s = cell_number(v.at(0));
            if (!s) return std::nullopt;
            return label_hypertension(*s);
          }, {}};
}

// History questions coded 1 = yes, 2 = no; other codes count as not reported.
inline TaskDefinition heart_task(std::vector<std::string> indicators = {"MCQ160B", "MCQ160C", "MCQ160D",
                                                                        "MCQ160E"}) {
  if (indicators.empty()) fail(ErrorCode::no_indicators_configured, "heart task needs indicator variables");
  return {"heart", 2, indicators, [](const std::vector<Cell>& v) -> std::optional<int> {
            std::vector<std::optional<bool>> flags;
            for (const auto& c : v) {
              const auto x = cell_number(c);
              flags.push_back(x && *x == 1.0 ? std::optional<bool>(true)
                                             : x && *x == 2.0 ? std::optional<bool>(false) : std::nullopt);
            }
            return label_heart_disease(flags);
          }, {}};
}

// Label taken directly from an integer-coded variable with codes 0..classes-1.
inline TaskDefinition custom_task(const std::string& label_variable, std::size_t classes) {
  return {"custom", classes, {label_variable}, [classes](const std::vector<Cell>& v) -> std::optional<int> {
            const auto x = cell_number(v.at(0));
            if (!x || *x < 0 || *x >= static_cast<double>(classes) || std::floor(*x) != *x) return std::nullopt;
            return static_cast<int>(*x);
          }, {}};
}

inline TaskDefinition task_by_name(const std::string& name, const std::string& label_variable = "",
                                   std::size_t classes = 2) {
  if (name == "diabetes") return diabetes_task();
  if (name == "hypertension") return hypertension_task();
  if (name == "heart") return heart_task();
  if (name == "custom") {
    if (label_variable.empty()) fail(ErrorCode::invalid_config, "custom task needs a label variable");
    return custom_task(label_variable, classes);
  }
  fail(ErrorCode::invalid_config, "unknown task '" + name + "'");
}

struct PrepConfig {
  double tau_mi = 0.02;
  double tau_avail = 0.5;
  std::size_t mi_bins = 16;
  std::uint64_t seed = 0;
  double train_fraction = 0.70;
  double validation_fraction = 0.15;
  CostTable costs = CostTable::reference();
};

struct FeaturePrep {
  std::string name;
  FeatureKind kind = FeatureKind::real;
  Category category = Category::questionnaire;
  NormStats stats;                      // scalar kinds
  std::vector<std::string> vocabulary;  // one-hot kinds
  double mutual_information = 0.0;
  double availability = 0.0;
};

struct Splits {
  std::vector<std::size_t> train, validation, test;
};

struct CandidateScore {
  std::string name;
  double mutual_information = 0.0;
  double availability = 0.0;
  bool selected = false;
};

struct TaskBundle {
  std::string task_name;
  std::vector<std::string> target_variables;
  Dataset data;
  std::vector<std::int64_t> subject_ids;
  std::vector<FeaturePrep> prep;
  Splits splits;
  PrepConfig config;
  std::vector<CandidateScore> candidates;
  std::vector<std::string> warnings;
  std::size_t unseen_codes = 0;

  Dataset train() const { return data.subset(splits.train); }
  Dataset validation() const { return data.subset(splits.validation); }
  Dataset test() const { return data.subset(splits.test); }

  // Encodes a raw measurement of feature j the way training data was encoded.
  std::vector<double> encode_value(std::size_t j, const Cell& raw) const {
    const auto& p = prep.at(j);
    if (is_one_hot(p.kind)) {
      std::vector<std::optional<std::string>> col{cell_code(raw)};
      return one_hot(col, p.vocabulary).rows.front();
    }
    const auto x = cell_number(raw);
    if (!x) return {0.0};
    return {(*x - p.stats.mean) / p.stats.std};
  }
};

namespace detail {

struct Column {
  const VariableTable* table = nullptr;
  std::unordered_map<std::int64_t, std::size_t> index;

  const Cell* at(std::int64_t subject) const {
    const auto it = index.find(subject);
    return it == index.end() ? nullptr : &table->values[it->second];
  }
};

inline Column column_of(const VariableTable& t) {
  Column c;
  c.table = &t;
  for (std::size_t i = 0; i < t.size(); ++i) c.index.emplace(t.subject_ids[i], i);
  return c;
}

}  // namespace detail

// Candidate variables scored on the training subjects; kept when both MI and
// availability reach their thresholds. Ordered by descending MI, then name.
inline std::vector<CandidateScore> auto_select(const std::vector<VariableTable>& tables,
                                               const std::vector<std::int64_t>& subjects, const std::vector<int>& labels,
                                               double tau_mi, double tau_avail, const std::set<std::string>& excluded,
                                               std::size_t bins = 16) {
  if (tau_mi < 0.0 || !(tau_avail >= 0.0 && tau_avail <= 1.0)) {
    fail(ErrorCode::invalid_config, "thresholds must satisfy tau_mi >= 0 and tau_avail in [0,1]");
  }
  std::vector<CandidateScore> scores;
  for (const auto& t : tables) {
    if (excluded.count(t.variable_id)) continue;
    const auto col = detail::column_of(t);
    const auto kind = infer_kind(t);
    CandidateScore s{t.variable_id, 0.0, 0.0, false};
    std::size_t observed = 0;
    std::vector<std::optional<double>> numbers;
    std::vector<std::optional<std::string>> codes;
    for (auto id : subjects) {
      const Cell* c = col.at(id);
      const bool present = c && !is_missing(*c);
      observed += present;
      if (is_one_hot(kind)) codes.push_back(present ? cell_code(*c) : std::nullopt);
      else numbers.push_back(present ? cell_number(*c) : std::nullopt);
    }
    s.availability = subjects.empty() ? 0.0 : static_cast<double>(observed) / static_cast<double>(subjects.size());
    try {
      s.mutual_information = is_one_hot(kind) ? mutual_information(codes, labels) : mutual_information(numbers, labels, bins);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::insufficient_data) throw;
      s.mutual_information = 0.0;
    }
    s.selected = s.mutual_information >= tau_mi && s.availability >= tau_avail;
    scores.push_back(s);
  }
  std::stable_sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) {
    if (a.mutual_information != b.mutual_information) return a.mutual_information > b.mutual_information;
    return a.name < b.name;
  });
  return scores;
}

// Joins the variable tables on subject id, labels subjects, splits them with a
// seeded shuffle and encodes the chosen features with training-split statistics.
inline TaskBundle build_task(const std::vector<VariableTable>& tables, const TaskDefinition& task,
                             const PrepConfig& config) {
  for (const auto& t : tables) t.validate();
  std::map<std::string, const VariableTable*> by_name;
  for (const auto& t : tables) {
    if (!by_name.emplace(t.variable_id, &t).second) {
      fail(ErrorCode::invalid_config, "variable '" + t.variable_id + "' appears twice");
    }
  }
  std::vector<detail::Column> targets;
  for (const auto& name : task.target_variables) {
    const auto it = by_name.find(name);
    if (it == by_name.end()) fail(ErrorCode::empty_join, "target variable '" + name + "' not found");
    targets.push_back(detail::column_of(*it->second));
  }

  TaskBundle bundle;
  bundle.task_name = task.name;
  bundle.target_variables = task.target_variables;
  bundle.config = config;

  std::set<std::int64_t> universe;
  for (const auto& t : tables) universe.insert(t.subject_ids.begin(), t.subject_ids.end());
  std::vector<std::int64_t> subjects;
  std::vector<int> labels;
  std::size_t invalid = 0;
  for (auto id : universe) {
    std::vector<Cell> cells;
    for (const auto& c : targets) {
      const Cell* cell = c.at(id);
      cells.push_back(cell ? *cell : Cell{});
    }
    try {
      if (auto label = task.label(cells)) {
        subjects.push_back(id);
        labels.push_back(*label);
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::invalid_measurement) throw;
      ++invalid;
    }
  }
  if (invalid) bundle.warnings.push_back(std::to_string(invalid) + " subjects dropped for invalid target measurements");
  if (subjects.empty()) fail(ErrorCode::empty_join, "no subject has a computable label");

  // split
  std::vector<std::size_t> order(subjects.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(config.seed);
  rng.shuffle(order);
  const auto n = order.size();
  const auto n_train = static_cast<std::size_t>(std::floor(config.train_fraction * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::floor(config.validation_fraction * static_cast<double>(n)));
  bundle.splits.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  bundle.splits.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                                  order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  bundle.splits.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  for (auto* s : {&bundle.splits.train, &bundle.splits.validation, &bundle.splits.test}) std::sort(s->begin(), s->end());

  std::vector<std::int64_t> train_subjects;
  std::vector<int> train_labels;
  for (auto i : bundle.splits.train) {
    train_subjects.push_back(subjects[i]);
    train_labels.push_back(labels[i]);
  }

  // feature choice
  const std::set<std::string> excluded(task.target_variables.begin(), task.target_variables.end());
  std::vector<std::string> chosen;
  if (!task.features.empty()) {
    for (const auto& name : task.features) {
      if (excluded.count(name)) fail(ErrorCode::invalid_config, "feature '" + name + "' defines the target");
      if (!by_name.count(name)) fail(ErrorCode::invalid_config, "feature '" + name + "' not found");
    }
    chosen = task.features;
  } else {
    bundle.candidates = auto_select(tables, train_subjects, train_labels, config.tau_mi, config.tau_avail, excluded,
                                    config.mi_bins);
    for (const auto& c : bundle.candidates) {
      if (c.selected) chosen.push_back(c.name);
    }
  }
  std::map<std::string, CandidateScore> score_of;
  for (const auto& c : bundle.candidates) score_of[c.name] = c;

  // encoding
  std::vector<FeatureMeta> metas;
  std::vector<std::vector<std::vector<double>>> encoded;  // feature -> row -> columns
  std::vector<std::vector<std::uint8_t>> observed;        // feature -> row
  std::vector<std::int64_t> train_ids = train_subjects;
  for (const auto& name : chosen) {
    const auto& table = *by_name.at(name);
    const auto col = detail::column_of(table);
    FeaturePrep prep;
    prep.name = name;
    prep.kind = infer_kind(table);
    prep.category = table.category.value_or(Category::questionnaire);
    if (auto it = score_of.find(name); it != score_of.end()) {
      prep.mutual_information = it->second.mutual_information;
      prep.availability = it->second.availability;
    }
    std::vector<std::uint8_t> present(subjects.size(), 0);
    for (std::size_t i = 0; i < subjects.size(); ++i) {
      const Cell* c = col.at(subjects[i]);
      present[i] = c && !is_missing(*c);
    }
    std::vector<std::vector<double>> rows(subjects.size());
    try {
      if (is_one_hot(prep.kind)) {
        std::vector<std::optional<std::string>> all(subjects.size()), train;
        for (std::size_t i = 0; i < subjects.size(); ++i) {
          if (present[i]) all[i] = cell_code(*col.at(subjects[i]));
        }
        for (auto i : bundle.splits.train) train.push_back(all[i]);
        prep.vocabulary = fit_vocabulary(train);
        if (prep.vocabulary.size() < 2) fail(ErrorCode::degenerate_column, "single observed code");
        auto oh = one_hot(all, prep.vocabulary);
        for (auto i : bundle.splits.train) {
          if (all[i] && std::all_of(oh.rows[i].begin(), oh.rows[i].end(), [](double v) { return v == 0.0; })) {
            fail(ErrorCode::degenerate_column, "training code missing from vocabulary");
          }
        }
        bundle.unseen_codes += oh.unseen;
        for (std::size_t i = 0; i < subjects.size(); ++i) {
          // unseen codes carry no information: treat as missing
          if (present[i] && std::all_of(oh.rows[i].begin(), oh.rows[i].end(), [](double v) { return v == 0.0; })) {
            present[i] = 0;
          }
        }
        rows = std::move(oh.rows);
      } else {
        std::vector<std::optional<double>> all(subjects.size()), train;
        for (std::size_t i = 0; i < subjects.size(); ++i) {
          if (!present[i]) continue;
          all[i] = cell_number(*col.at(subjects[i]));
          if (!all[i]) present[i] = 0;  // non-numeric code in a numeric column
        }
        for (auto i : bundle.splits.train) train.push_back(all[i]);
        prep.stats = fit_normalization(train);
        const auto z = normalize(all, prep.stats);
        for (std::size_t i = 0; i < subjects.size(); ++i) rows[i] = {z[i]};
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::degenerate_column && e.code() != ErrorCode::empty_vocabulary) throw;
      bundle.warnings.push_back("dropped '" + name + "': " + e.what());
      continue;
    }
    const auto width = is_one_hot(prep.kind) ? prep.vocabulary.size() : std::size_t{1};
    metas.push_back({name, prep.kind, prep.category, Cost::units(config.costs.cost(prep.category)), width});
    bundle.prep.push_back(std::move(prep));
    encoded.push_back(std::move(rows));
    observed.push_back(std::move(present));
  }
  if (metas.empty()) fail(ErrorCode::no_features_selected, "no variable passed selection for task " + task.name);

  Dataset& data = bundle.data;
  data.catalog = FeatureCatalog(std::move(metas));
  data.num_classes = task.num_classes;
  data.task_name = task.name;
  data.labels = labels;
  bundle.subject_ids = subjects;
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    std::vector<double> row;
    Mask avail;
    for (std::size_t j = 0; j < encoded.size(); ++j) {
      row.insert(row.end(), encoded[j][i].begin(), encoded[j][i].end());
      avail.push_back(observed[j][i]);
    }
    data.rows.push_back(std::move(row));
    data.availability.push_back(std::move(avail));
  }
  data.validate();
  return bundle;
}

// Largest deviation of training-split mean from 0 and std from 1 over scalar
// features, and whether every observed one-hot group sums to 1.
struct NormalizationAudit {
  double worst_mean = 0.0;
  double worst_std = 0.0;
  bool one_hot_ok = true;
  bool missing_zero = true;
};

inline NormalizationAudit audit_normalization(const TaskBundle& bundle) {
  NormalizationAudit audit;
  const auto& data = bundle.data;
  const auto& catalog = data.catalog;
  for (std::size_t j = 0; j < catalog.size(); ++j) {
    const auto off = catalog.offset(j), width = catalog.width(j);
    double sum = 0.0, ss = 0.0;
    std::size_t n = 0;
    for (auto i : bundle.splits.train) {
      if (!data.availability[i][j]) continue;
      ++n;
      sum += data.rows[i][off];
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data.availability[i][j]) continue;
      for (std::size_t c = 0; c < width; ++c) audit.missing_zero = audit.missing_zero && data.rows[i][off + c] == 0.0;
    }
    if (is_one_hot(catalog[j].kind)) {
      for (std::size_t i = 0; i < data.size(); ++i) {
        if (!data.availability[i][j]) continue;
        double s = 0.0;
        for (std::size_t c = 0; c < width; ++c) s += data.rows[i][off + c];
        audit.one_hot_ok = audit.one_hot_ok && s == 1.0;
      }
      continue;
    }
    if (n == 0) continue;
    const double mean = sum / static_cast<double>(n);
    for (auto i : bundle.splits.train) {
      if (data.availability[i][j]) ss += (data.rows[i][off] - mean) * (data.rows[i][off] - mean);
    }
    audit.worst_mean = std::max(audit.worst_mean, std::abs(mean));
    audit.worst_std = std::max(audit.worst_std, std::abs(std::sqrt(ss / static_cast<double>(n)) - 1.0));
  }
  return audit;
}

// ---- bundle files ----

inline std::vector<std::string> encoded_column_names(const TaskBundle& b) {
  std::vector<std::string> names;
  for (const auto& p : b.prep) {
    if (is_one_hot(p.kind)) {
      for (const auto& code : p.vocabulary) names.push_back(p.name + "=" + code);
    } else {
      names.push_back(p.name);
    }
  }
  return names;
}

inline nlohmann::json bundle_manifest(const TaskBundle& b) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& p : b.prep) {
    nlohmann::json f{{"name", p.name},
                     {"kind", std::string(to_string(p.kind))},
                     {"category", std::string(to_string(p.category))},
                     {"mutual_information", p.mutual_information},
                     {"availability", p.availability}};
    if (is_one_hot(p.kind)) f["vocabulary"] = p.vocabulary;
    else f["norm_stats"] = {{"mean", p.stats.mean}, {"std", p.stats.std}};
    features.push_back(f);
  }
  nlohmann::json candidates = nlohmann::json::array();
  for (const auto& c : b.candidates) {
    candidates.push_back({{"name", c.name}, {"mutual_information", c.mutual_information},
                          {"availability", c.availability}, {"selected", c.selected}});
  }
  nlohmann::json costs = nlohmann::json::object();
  for (const auto& [cat, cost] : b.config.costs.costs()) costs[std::string(to_string(cat))] = cost;
  return {{"format", "costacq-dataset"},
          {"version", 1},
          {"task", {{"name", b.task_name}, {"num_classes", b.data.num_classes}, {"target_variables", b.target_variables}}},
          {"seed", b.config.seed},
          {"thresholds", {{"tau_mi", b.config.tau_mi}, {"tau_avail", b.config.tau_avail}, {"mi_bins", b.config.mi_bins}}},
          {"split", {{"train", b.config.train_fraction}, {"validation", b.config.validation_fraction}}},
          {"category_costs", costs},
          {"features", features},
          {"candidates", candidates},
          {"unseen_codes", b.unseen_codes},
          {"warnings", b.warnings},
          {"rows", b.data.size()}};
}

inline void write_bundle(const std::filesystem::path& dir, const TaskBundle& b) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) fail(ErrorCode::io_error, "cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open("matrix.csv");
    out << "subject_id,label";
    for (const auto& n : encoded_column_names(b)) out << ',' << n;
    out << '\n';
    for (std::size_t i = 0; i < b.data.size(); ++i) {
      out << b.subject_ids[i] << ',' << b.data.labels[i];
      for (double v : b.data.rows[i]) out << ',' << csv::format_double(v);
      out << '\n';
    }
  }
  {
    auto out = open("availability.csv");
    out << "subject_id";
    for (const auto& p : b.prep) out << ',' << p.name;
    out << '\n';
    for (std::size_t i = 0; i < b.data.size(); ++i) {
      out << b.subject_ids[i];
      for (auto a : b.data.availability[i]) out << ',' << int(a);
      out << '\n';
    }
  }
  {
    auto out = open("splits.csv");
    out << "row,subject_id,split\n";
    std::vector<std::string> split_of(b.data.size());
    for (auto i : b.splits.train) split_of[i] = "train";
    for (auto i : b.splits.validation) split_of[i] = "validation";
    for (auto i : b.splits.test) split_of[i] = "test";
    for (std::size_t i = 0; i < b.data.size(); ++i) out << i << ',' << b.subject_ids[i] << ',' << split_of[i] << '\n';
  }
  {
    auto out = open("catalog.csv");
    b.data.catalog.write_csv(out);
  }
  {
    auto out = open("manifest.json");
    out << bundle_manifest(b).dump(2) << '\n';
  }
}

inline TaskBundle read_bundle(const std::filesystem::path& dir) {
  TaskBundle b;
  nlohmann::json manifest;
  {
    std::ifstream in(dir / "manifest.json");
    if (!in) fail(ErrorCode::io_error, "cannot open " + (dir / "manifest.json").string());
    try {
      manifest = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::parse_error, std::string("manifest: ") + e.what());
    }
  }
  try {
    b.task_name = manifest.at("task").at("name");
    b.target_variables = manifest.at("task").at("target_variables").get<std::vector<std::string>>();
    b.data.num_classes = manifest.at("task").at("num_classes");
    b.config.seed = manifest.at("seed");
    b.config.tau_mi = manifest.at("thresholds").at("tau_mi");
    b.config.tau_avail = manifest.at("thresholds").at("tau_avail");
    b.config.mi_bins = manifest.at("thresholds").at("mi_bins");
    b.config.train_fraction = manifest.at("split").at("train");
    b.config.validation_fraction = manifest.at("split").at("validation");
    std::map<Category, int> costs;
    for (const auto& [k, v] : manifest.at("category_costs").items()) costs[parse_category(k)] = v.get<int>();
    b.config.costs = CostTable(costs);
    for (const auto& f : manifest.at("features")) {
      FeaturePrep p;
      p.name = f.at("name");
      p.kind = parse_kind(f.at("kind").get<std::string>());
      p.category = parse_category(f.at("category").get<std::string>());
      p.mutual_information = f.at("mutual_information");
      p.availability = f.at("availability");
      if (f.contains("vocabulary")) p.vocabulary = f.at("vocabulary").get<std::vector<std::string>>();
      if (f.contains("norm_stats")) p.stats = {f.at("norm_stats").at("mean"), f.at("norm_stats").at("std")};
      b.prep.push_back(std::move(p));
    }
    for (const auto& c : manifest.at("candidates")) {
      b.candidates.push_back({c.at("name"), c.at("mutual_information"), c.at("availability"), c.at("selected")});
    }
    b.unseen_codes = manifest.at("unseen_codes");
    b.warnings = manifest.at("warnings").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, std::string("manifest: ") + e.what());
  }
  b.data.task_name = b.task_name;
  b.data.catalog = FeatureCatalog::load((dir / "catalog.csv").string());
  const auto matrix = csv::read_file((dir / "matrix.csv").string());
  const auto avail = csv::read_file((dir / "availability.csv").string());
  const auto splits = csv::read_file((dir / "splits.csv").string());
  if (matrix.rows.size() != avail.rows.size() || matrix.rows.size() != splits.rows.size()) {
    fail(ErrorCode::parse_error, "bundle files disagree on row count");
  }
  for (std::size_t i = 0; i < matrix.rows.size(); ++i) {
    const auto& r = matrix.rows[i];
    b.subject_ids.push_back(csv::parse_int(r[0]));
    b.data.labels.push_back(static_cast<int>(csv::parse_int(r[1])));
    std::vector<double> row;
    for (std::size_t c = 2; c < r.size(); ++c) row.push_back(csv::parse_double(r[c]));
    b.data.rows.push_back(std::move(row));
    Mask m;
    for (std::size_t c = 1; c < avail.rows[i].size(); ++c) m.push_back(static_cast<std::uint8_t>(csv::parse_int(avail.rows[i][c])));
    b.data.availability.push_back(std::move(m));
    const auto& split = splits.rows[i][2];
    if (split == "train") b.splits.train.push_back(i);
    else if (split == "validation") b.splits.validation.push_back(i);
    else if (split == "test") b.splits.test.push_back(i);
    else fail(ErrorCode::parse_error, "unknown split '" + split + "'");
  }
  b.data.validate();
  return b;
}

}  // namespace costacq
