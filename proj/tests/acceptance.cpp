// Acceptance checks, one per criterion. Usage: acceptance A1 [A2 ...] or
// acceptance all. Prints one PASS/FAIL/SKIP line per criterion; exits 0 when
// everything ran passed, 77 when the only criterion requested was skipped,
// 1 otherwise.

#include <sys/wait.h>

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "costacq/costs.hpp"
#include "costacq/evaluation.hpp"
#include "costacq/synthetic.hpp"
#include "costacq/task.hpp"
#include "costacq/xpt.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "support/xpt_reference.hpp"

using namespace costacq;
namespace fs = std::filesystem;
using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

namespace {

enum class Verdict { pass, fail, skip };

struct Outcome {
  Verdict verdict = Verdict::fail;
  std::string detail;
};

Outcome pass(std::string d) { return {Verdict::pass, std::move(d)}; }
Outcome fail_with(std::string d) { return {Verdict::fail, std::move(d)}; }
Outcome check(bool ok, std::string d) { return {ok ? Verdict::pass : Verdict::fail, std::move(d)}; }

std::string pct(double x) {
  std::ostringstream s;
  s.precision(1);
  s << std::fixed << 100.0 * x << '%';
  return s.str();
}

Mask unacquired(const AcquisitionState& s) {
  Mask m(s.num_features());
  for (std::size_t j = 0; j < m.size(); ++j) m[j] = !s.acquired[j];
  return m;
}

// All-features accuracy computed without the library's sweep machinery.
double direct_full_accuracy(const Classifier& clf, const Dataset& data) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto s = AcquisitionState::start(data.catalog);
    for (std::size_t j = 0; j < data.catalog.size(); ++j) s = query_from_row(s, j, data.rows[i], data.catalog);
    const auto p = clf.probabilities(s);
    correct += static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin()) == data.labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

// ---- A1 ----

Outcome a1() {
  Rng rng(2025);
  double worst = 0.0;
  for (int n = 0; n < 25; ++n) worst = std::max(worst, oracle::worst_gradient_error(oracle::random_net(rng), rng));
  std::ostringstream d;
  d << "25 nets, worst relative error " << std::scientific << worst << " (limit 1e-4)";
  return check(worst <= 1e-4, d.str());
}

// ---- A2 ----

// Exact value of a decimal string such as "12.000345".
cpp_rational decimal(const std::string& text) {
  std::size_t i = 0;
  const bool negative = !text.empty() && text[0] == '-';
  if (negative) ++i;
  cpp_int num = 0, den = 1;
  bool frac = false;
  for (; i < text.size(); ++i) {
    if (text[i] == '.') {
      frac = true;
      continue;
    }
    if (text[i] < '0' || text[i] > '9') throw std::runtime_error("not a decimal: " + text);
    num = num * 10 + (text[i] - '0');
    if (frac) den *= 10;
  }
  return cpp_rational(negative ? cpp_int(-num) : num, den);
}

Outcome a2() {
  std::mt19937_64 gen(11);
  auto uniform = [&](std::uint64_t n) { return gen() % n; };
  oracle::FunctionClassifier clf(2, [](const AcquisitionState&) { return std::vector<double>{0.5, 0.5}; });
  RandomStrategy random;
  std::ostringstream log;
  write_trajectory_header(log);
  std::vector<cpp_rational> expected(1000);
  std::vector<cpp_rational> reported(1000);
  std::vector<cpp_rational> budgets(1000, cpp_rational(-1));
  for (std::size_t e = 0; e < 1000; ++e) {
    const std::size_t d = 1 + uniform(12);
    std::vector<Cost> costs;
    std::vector<cpp_rational> exact;
    for (std::size_t j = 0; j < d; ++j) {
      const auto micros = static_cast<std::int64_t>(uniform(4) == 0 ? uniform(10) : uniform(20'000'000));
      costs.push_back(Cost::from_micros(micros));
      exact.push_back(cpp_rational(micros, 1'000'000));
    }
    const auto catalog = make_real_catalog(costs);
    Mask k0(d, 0);
    for (auto& b : k0) b = uniform(4) == 0;
    std::vector<double> row(d);
    for (auto& v : row) v = static_cast<double>(uniform(1000)) / 100.0;
    auto rule = TerminationRule::unlimited();
    if (uniform(2)) {
      const auto b = static_cast<std::int64_t>(uniform(60'000'000));
      rule = TerminationRule::budget(Cost::from_micros(b));
      budgets[e] = cpp_rational(b, 1'000'000);
    }
    EpisodeOptions opt;
    opt.free_at_start = k0;
    opt.seed = gen();
    const auto r = run_episode(random, row, 0, catalog, rule, clf, opt);
    for (const auto& step : trajectory_of(r, e)) write_trajectory_step(log, step);
    for (std::size_t j = 0; j < d; ++j) {
      if (r.final_state.acquired[j] && !k0[j]) expected[e] += exact[j];
    }
    if (total_cost(r.final_state, catalog) != r.total_cost) return fail_with("episode " + std::to_string(e) + ": result and state disagree");
    reported[e] = decimal(total_cost(r.final_state, catalog).str());
  }

  // independent replay of the written log
  std::vector<cpp_rational> replayed(1000);
  std::istringstream in(log.str());
  std::string line;
  std::getline(in, line);
  std::size_t steps = 0;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (f.size() != 5) return fail_with("malformed log line: " + line);
    const auto e = std::stoul(f[0]);
    replayed[e] += decimal(f[3]);
    if (replayed[e] != decimal(f[4])) return fail_with("running total mismatch in episode " + f[0]);
    ++steps;
  }
  for (std::size_t e = 0; e < 1000; ++e) {
    if (replayed[e] != expected[e] || reported[e] != expected[e]) {
      return fail_with("episode " + std::to_string(e) + ": replay " + replayed[e].str() + ", reported " +
                       reported[e].str() + ", expected " + expected[e].str());
    }
    if (budgets[e] >= 0 && expected[e] > budgets[e]) return fail_with("episode " + std::to_string(e) + " overspent");
  }
  return pass("1000 episodes, " + std::to_string(steps) + " logged purchases, exact agreement");
}

// ---- A3 ----

Outcome a3() {
  const oracle::ToyMdp mdp{5.0, 1.0};
  const auto v = mdp.value_iteration();
  const auto data = synthetic::toy_mdp(2000, 5);
  oracle::FunctionClassifier bayes(2, [](const AcquisitionState& s) {
    if (!s.acquired[0]) return std::vector<double>{0.5, 0.5};
    return s.values[0] > 0 ? std::vector<double>{0.0, 1.0} : std::vector<double>{1.0, 0.0};
  });
  std::string detail;
  bool ok = true;
  for (std::uint64_t seed : {7, 8, 9}) {
    QConfig c;
    c.variant = QVariant::rl_based;
    c.lambda = 5.0;
    c.episodes = 3000;
    c.hidden = {32};
    c.adam.learning_rate = 3e-3;
    const auto result = train_q_strategy(data, bayes, c, seed);
    int match = 0, total = 0;
    for (const auto& st : oracle::ToyMdp::all_states()) {
      // optimal action values from the value-iteration table
      std::array<double, 4> q{};
      for (int j = 0; j < 3; ++j) {
        if (st[j] != 0) {
          q[j] = -HUGE_VAL;
          continue;
        }
        q[j] = -mdp.cost;
        for (int outcome : {1, 2}) {
          auto n = st;
          n[j] = outcome;
          q[j] += 0.5 * v[oracle::ToyMdp::index(n)];
        }
      }
      q[3] = mdp.predict_value(st);
      const double best = *std::max_element(q.begin(), q.end());
      auto s = AcquisitionState::start(data.catalog);
      for (std::size_t j = 0; j < 3; ++j) {
        if (st[j]) s = query(s, j, st[j] == 2 ? 1.0 : -1.0, data.catalog);
      }
      const auto a = *argmax_allowed(result.strategy->q_values(s), legal_actions(s, QVariant::rl_based));
      ++total;
      match += q[a] >= best - 1e-9;
    }
    const double frac = double(match) / total;
    ok = ok && frac >= 0.95;
    detail += "seed " + std::to_string(seed) + ": " + std::to_string(match) + "/" + std::to_string(total) + "; ";
  }
  return check(ok, detail + "need >= 95% each");
}

// ---- A4, A5 ----

StrategySpec spec_for(const std::string& kind) {
  StrategySpec spec;
  spec.kind = kind;
  spec.q.gamma = 0.9;
  spec.q.episodes = 2000;
  return spec;
}

struct FirstPicks {
  std::map<std::size_t, int> first;
  double accuracy = 0.0;
};

FirstPicks first_picks(const TrainedStrategy& t, const Dataset& test, const TerminationRule& rule) {
  FirstPicks out;
  const auto policy = t.policy(test.catalog);
  int correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    EpisodeOptions o;
    o.seed = i;
    const auto r = run_episode(*policy, test.rows[i], test.labels[i], test.catalog, rule, *t.predictor(), o);
    if (!r.order.empty()) out.first[r.order.front()] += 1;
    correct += r.correct;
  }
  out.accuracy = double(correct) / static_cast<double>(test.size());
  return out;
}

Outcome a4() {
  const auto train = synthetic::informative(3000, 1);
  const auto test = synthetic::informative(200, 2);
  bool ok = true;
  std::string detail;
  for (const char* kind : {"ol", "fact", "exhaustive"}) {
    const auto t = train_strategy(train, spec_for(kind), 5);
    const auto picks = first_picks(t, test, TerminationRule::unlimited());
    const int first0 = picks.first.count(0) ? picks.first.at(0) : 0;
    ok = ok && first0 >= 180;
    detail += std::string(kind) + " " + std::to_string(first0) + "/200; ";
  }
  return check(ok, detail + "feature 0 first, need >= 180/200");
}

Outcome a5() {
  const auto train = synthetic::cost_tradeoff(3000, 1);
  const auto test = synthetic::cost_tradeoff(200, 2);
  const auto rule = TerminationRule::budget(Cost::units(1));
  const auto random = first_picks(train_strategy(train, spec_for("random"), 5), test, rule);
  bool ok = true;
  std::string detail = "random acc " + pct(random.accuracy) + "; ";
  for (const char* kind : {"ol", "fact"}) {
    const auto picks = first_picks(train_strategy(train, spec_for(kind), 5), test, rule);
    const int first_b = picks.first.count(1) ? picks.first.at(1) : 0;
    ok = ok && first_b >= 160 && picks.accuracy >= 0.85 && picks.accuracy >= random.accuracy + 0.05;
    detail += std::string(kind) + " B first " + std::to_string(first_b) + "/200 acc " + pct(picks.accuracy) + "; ";
  }
  return check(ok, detail + "need B >= 160/200, acc >= 85% and >= random + 5 points");
}

// ---- A6 ----

Outcome a6() {
  // classifiers train briefly; Q networks keep their default length since an
  // undertrained OL network can dip below its stop threshold
  const std::vector<std::pair<Dataset, Dataset>> tasks{
      {synthetic::informative(1000, 1), synthetic::informative(300, 2)},
      {synthetic::cost_tradeoff(1000, 1), synthetic::cost_tradeoff(300, 2)},
      {synthetic::toy_mdp(1000, 1), synthetic::toy_mdp(300, 2)},
  };
  bool ok = true;
  double worst = 0.0;
  std::string failures, worst_pair = "none";
  for (const auto& [train, test] : tasks) {
    for (const auto& kind : strategy_kinds()) {
      auto spec = spec_for(kind);
      spec.classifier.epochs = 10;
      spec.dae.epochs = 10;
      auto t = train_strategy(train, spec, 3);
      // without the predict action the rl policy runs until the budget ends
      if (t.q && kind == "rl") t.q->disable_predict(true);
      const auto sweep = sweep_budgets(t, test, {Cost::unlimited()}, 4);
      const double full = direct_full_accuracy(*t.predictor(), test);
      const double gap = std::abs(sweep.points.front().accuracy - full);
      if (gap > worst) {
        worst = gap;
        worst_pair = test.task_name + "/" + kind;
      }
      if (gap > 0.005) {
        ok = false;
        failures += test.task_name + "/" + kind + " sweep " + pct(sweep.points.front().accuracy) + " vs " + pct(full) + "; ";
      }
    }
  }
  return check(ok, failures + "18 strategy/task pairs, worst gap " + std::to_string(100.0 * worst) + " points at " + worst_pair +
                         " (limit 0.5)");
}

// ---- A7 ----

Outcome a7() {
  const auto table = CostTable::from_survey(load_survey(std::string(COSTACQ_FIXTURES) + "/survey.csv"));
  std::ostringstream got;
  for (auto c : kAllCategories) got << table.cost(c) << ' ';
  const bool ok = table.cost(Category::demographics) == 2 && table.cost(Category::questionnaire) == 4 &&
                  table.cost(Category::examination) == 5 && table.cost(Category::laboratory) == 9;
  return check(ok, "demographics/questionnaire/examination/laboratory = " + got.str() + "(want 2 4 5 9)");
}

// ---- A8 ----

Outcome a8() {
  const char* dir = std::getenv("COSTACQ_NHANES_DIR");
  if (!dir || !*dir) return {Verdict::skip, "set COSTACQ_NHANES_DIR to an ingested NHANES variable directory"};
  const auto tables = load_variable_dir(dir);
  bool ok = true;
  std::string detail;
  const std::vector<std::pair<TaskDefinition, double>> targets{
      {diabetes_task(), 0.842}, {heart_task(), 0.797}, {hypertension_task(), 0.819}};
  for (const auto& [task, reference] : targets) {
    PrepConfig pc;
    pc.seed = 1;
    const auto bundle = build_task(tables, task, pc);
    const auto clf = MaskedClassifier::train(bundle.train(), ClassifierConfig{}, 1);
    const double acc = direct_full_accuracy(clf, bundle.test());
    ok = ok && std::abs(acc - reference) <= 0.02;
    detail += task.name + " " + pct(acc) + " (ref " + pct(reference) + "); ";

    if (task.name != "diabetes") continue;
    const auto glu = std::find_if(tables.begin(), tables.end(), [](const VariableTable& t) { return t.variable_id == "LBXGLU"; });
    std::map<std::int64_t, double> glucose;
    for (std::size_t i = 0; i < glu->size(); ++i) {
      if (const auto g = cell_number(glu->values[i])) glucose[glu->subject_ids[i]] = *g;
    }
    std::vector<std::size_t> rows(bundle.data.size());
    std::iota(rows.begin(), rows.end(), 0);
    std::shuffle(rows.begin(), rows.end(), std::mt19937_64(99));
    rows.resize(std::min<std::size_t>(1000, rows.size()));
    int wrong = 0;
    for (auto i : rows) {
      const double g = glucose.at(bundle.subject_ids[i]);
      const int want = g < 100.0 ? 0 : (g <= 125.0 ? 1 : 2);
      wrong += bundle.data.labels[i] != want;
    }
    ok = ok && wrong == 0;
    detail += "label audit " + std::to_string(wrong) + " wrong of " + std::to_string(rows.size()) + "; ";
  }
  return check(ok, detail + "accuracy within 2 points");
}

// ---- A9 ----

Outcome a9() {
  const std::string dir = std::string(COSTACQ_FIXTURES) + "/xpt/";
  for (const char* name : {"golden", "mixed", "empty", "two_members"}) {
    std::ifstream in(dir + name + ".json");
    const auto want = nlohmann::json::parse(in);
    const auto mismatch = oracle::document_mismatch(xpt::parse_file(dir + name + ".xpt"), want);
    if (!mismatch.empty()) return fail_with(std::string(name) + ": " + mismatch);
  }
  std::mt19937_64 gen(31337);
  int mismatches = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto word = gen();
    std::array<std::uint8_t, 8> b{};
    for (int k = 0; k < 8; ++k) b[k] = static_cast<std::uint8_t>(word >> (8 * (7 - k)));
    const auto got = xpt::ibm_to_ieee(b);
    const auto want = oracle::reference_ibm(b);
    if (got.index() != want.index()) {
      ++mismatches;
    } else if (const auto* d = std::get_if<double>(&got)) {
      mismatches += std::bit_cast<std::uint64_t>(*d) != std::bit_cast<std::uint64_t>(std::get<double>(want));
    }
  }
  return check(mismatches == 0, "4 fixtures match; " + std::to_string(mismatches) + " mismatches on 10000 random patterns");
}

// ---- A10 ----

Outcome a10() {
  auto data = synthetic::informative(1000, 41, 6);
  const std::vector<Cost> costs{Cost::units(3), Cost::units(1), Cost::from_micros(2'500'000), Cost::units(7),
                                Cost::units(1), Cost::from_micros(400'000)};
  data.catalog = data.catalog.with_costs(costs);
  ClassifierConfig cc;
  cc.epochs = 10;
  const auto enc = BinaryEncoder::fit(data.catalog, data.rows, data.availability, 3);
  auto masked = std::make_shared<MaskedClassifier>(MaskedClassifier::train(data, cc, 1));
  auto binary = std::make_shared<BinaryClassifier>(BinaryClassifier::train(data, enc, cc, 2));
  DaeConfig dc;
  dc.epochs = 5;
  auto dae = std::make_shared<DenoisingAutoencoder>(DenoisingAutoencoder::train(data, enc, dc, 3));
  auto store = std::make_shared<TrainStore>(data, 10);
  const auto test = synthetic::informative(300, 42, 6);
  Rng rng(5);
  int states = 0, changed = 0;
  while (states < 100) {
    const auto& row = test.rows[rng.index(test.size())];
    auto s = AcquisitionState::start(data.catalog);
    for (std::size_t j = 0; j < 6; ++j) {
      if (rng.bernoulli(0.35)) s = query_from_row(s, j, row, data.catalog);
    }
    const auto allowed = unacquired(s);
    if (std::count(allowed.begin(), allowed.end(), 1) < 2) continue;
    ++states;
    const auto ref_fact = FactStrategy({binary, dae}, data.catalog).select(s, allowed, rng).feature;
    const auto ref_ex = ExhaustiveStrategy(masked, store, data.catalog).select(s, allowed, rng).feature;
    for (double alpha : {0.5, 2.0, 10.0}) {
      const auto c = data.catalog.scaled(alpha);
      changed += FactStrategy({binary, dae}, c).select(s, allowed, rng).feature != ref_fact;
      changed += ExhaustiveStrategy(masked, store, c).select(s, allowed, rng).feature != ref_ex;
    }
  }
  return check(changed == 0, "100 states x 3 scales x 2 strategies, " + std::to_string(changed) + " changed choices");
}

// ---- A11 ----

int shell(const std::string& cmd) {
  const int status = std::system((cmd + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome a11() {
  const auto root = fs::temp_directory_path() / "costacq_acceptance_a11";
  fs::remove_all(root);
  const std::string cli = COSTACQ_CLI;
  // relative paths keep the recorded configs identical between the two runs
  const std::vector<std::string> steps{
      "synth --kind survey --subjects 600 --seed 3 --out data",
      "prepare --task diabetes --seed 7 --data data --out bundle",
      "train --bundle bundle --strategy ol --episodes 80 --epochs 4 --seed 5 --out ol.json",
      "train --bundle bundle --strategy fact --epochs 4 --seed 5 --out fact.json",
      "sweep --bundle bundle --checkpoint ol.json fact.json --budgets 0,5,20,inf --order-samples 10 --seed 2 --out results",
  };
  for (const char* run : {"a", "b"}) {
    fs::create_directories(root / run);
    for (const auto& step : steps) {
      const int code = shell("cd " + (root / run).string() + " && " + cli + " " + step);
      if (code != 0) return fail_with(std::string("run ") + run + ": '" + step + "' exited " + std::to_string(code));
    }
  }
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
    if (!e.is_regular_file()) continue;
    ++files;
    const auto rel = fs::relative(e.path(), root / "a");
    const auto other = root / "b" / rel;
    if (!fs::exists(other) || slurp(e.path()) != slurp(other)) return fail_with(rel.string() + " differs");
  }
  std::size_t other_files = 0;
  for (const auto& e : fs::recursive_directory_iterator(root / "b")) other_files += e.is_regular_file();
  if (other_files != files) return fail_with("file sets differ");
  fs::remove_all(root);
  return check(files > 10, std::to_string(files) + " files byte-identical across two runs");
}

const std::vector<std::tuple<std::string, std::string, std::function<Outcome()>>>& criteria() {
  static const std::vector<std::tuple<std::string, std::string, std::function<Outcome()>>> all{
      {"A1", "gradient correctness", a1},
      {"A2", "cost accounting", a2},
      {"A3", "toy MDP policy", a3},
      {"A4", "informative feature first", a4},
      {"A5", "cost sensitivity at budget 1", a5},
      {"A6", "full-budget consistency", a6},
      {"A7", "cost table from survey", a7},
      {"A8", "NHANES task accuracy", a8},
      {"A9", "XPT conformance", a9},
      {"A10", "cost scale invariance", a10},
      {"A11", "CLI determinism", a11},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> wanted(argv + 1, argv + argc);
  if (wanted.empty() || (wanted.size() == 1 && wanted[0] == "all")) {
    wanted.clear();
    for (const auto& c : criteria()) wanted.push_back(std::get<0>(c));
  }
  int failed = 0, skipped = 0;
  for (const auto& id : wanted) {
    const auto it = std::find_if(criteria().begin(), criteria().end(), [&](const auto& c) { return std::get<0>(c) == id; });
    if (it == criteria().end()) {
      std::cout << id << " FAIL unknown criterion\n";
      ++failed;
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = std::get<2>(*it)();
    } catch (const std::exception& e) {
      o = fail_with(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const char* tag = o.verdict == Verdict::pass ? "PASS" : o.verdict == Verdict::skip ? "SKIP" : "FAIL";
    std::ostringstream t;
    t.precision(1);
    t << std::fixed << secs;
    std::cout << id << ' ' << tag << ' ' << std::get<1>(*it) << ": " << o.detail << " [" << t.str() << " s]" << std::endl;
    failed += o.verdict == Verdict::fail;
    skipped += o.verdict == Verdict::skip;
  }
  if (failed) return 1;
  if (skipped && skipped == static_cast<int>(wanted.size())) return 77;
  return 0;
}
