// costacq: command-line front end for dataset preparation, training,
// evaluation sweeps and interactive acquisition sessions.

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "costacq/costs.hpp"
#include "costacq/evaluation.hpp"
#include "costacq/models.hpp"
#include "costacq/synthetic.hpp"
#include "costacq/task.hpp"
#include "costacq/xpt.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace costacq;

namespace {

constexpr int kConfigError = 2;
constexpr int kDataError = 3;

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io_error, "cannot open " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

// Hashes of every regular file under `dir`, keyed by relative path.
json hash_tree(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  json out = json::object();
  for (const auto& f : files) out[fs::relative(f, dir).generic_string()] = sha256_file(f);
  return out;
}

void write_json(const fs::path& path, const json& j) {
  export_file(path, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::invalid_config, "cannot open config " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::invalid_config, path + ": " + e.what());
  }
}

// A JSON config document overlaid on command-line options: values from the
// file fill options the user did not pass; flags always win. Keys the
// command does not know are configuration errors.
class Overlay {
 public:
  explicit Overlay(const std::string& path) : Overlay(path.empty() ? json::object() : read_json(path)) {}
  explicit Overlay(json j) : j_(std::move(j)) {
    if (!j_.is_object()) fail(ErrorCode::invalid_config, "config must be a JSON object");
  }

  template <class T>
  Overlay& take(const char* key, T& value, const CLI::Option* opt) {
    known_.insert(key);
    if ((opt && opt->count() > 0) || !j_.contains(key)) return *this;
    try {
      value = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      fail(ErrorCode::invalid_config, std::string("config.") + key + ": " + e.what());
    }
    return *this;
  }

  const json* section(const char* key) {
    known_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!known_.count(k)) fail(ErrorCode::invalid_config, "unknown config key '" + k + "'");
    }
  }

 private:
  json j_;
  std::set<std::string> known_;
};

void require_path(const std::string& path, const char* what) {
  if (path.empty()) fail(ErrorCode::invalid_config, std::string(what) + " is required");
  if (!fs::exists(path)) fail(ErrorCode::invalid_config, std::string(what) + " '" + path + "' does not exist");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  for (auto& v : csv::split(s, ',')) {
    if (!v.empty()) out.push_back(v);
  }
  return out;
}

Cost parse_budget(const std::string& s) {
  try {
    return Cost::parse(s);
  } catch (const Error&) {
    fail(ErrorCode::invalid_config, "bad budget '" + s + "'");
  }
}

// ---- synth ----

struct SynthArgs {
  std::string kind = "survey";
  std::size_t subjects = 2000;
  std::uint64_t seed = 0;
  std::string out;
  std::string config;
};

void run_synth(const SynthArgs& a) {
  std::vector<VariableTable> tables;
  if (a.kind == "survey") {
    tables = synthetic::survey_tables(a.subjects, a.seed);
  } else if (a.kind == "toy") {
    const auto d = synthetic::toy_mdp(a.subjects, a.seed);
    tables = synthetic::tables_from_dataset(d, std::vector<Category>(3, Category::examination));
  } else if (a.kind == "informative") {
    const auto d = synthetic::informative(a.subjects, a.seed);
    tables = synthetic::tables_from_dataset(d, std::vector<Category>(d.catalog.size(), Category::questionnaire));
  } else if (a.kind == "tradeoff") {
    const auto d = synthetic::cost_tradeoff(a.subjects, a.seed);
    std::vector<Category> cats(d.catalog.size(), Category::demographics);
    cats[0] = Category::laboratory;
    tables = synthetic::tables_from_dataset(d, cats);
  } else {
    fail(ErrorCode::invalid_config, "unknown synthetic kind '" + a.kind + "'");
  }
  for (const auto& t : tables) save_variable_table(a.out, t);
  write_json(fs::path(a.out) / "run.json",
             {{"command", "synth"}, {"kind", a.kind}, {"subjects", a.subjects}, {"seed", a.seed}, {"out", a.out}});
  std::cout << "wrote " << tables.size() << " variables to " << a.out << '\n';
}

// ---- ingest / xpt dump ----

struct IngestArgs {
  std::vector<std::string> files;
  std::string category;
  std::string id = "SEQN";
  std::string out;
  std::string config;
};

void run_ingest(const IngestArgs& a) {
  const auto category = parse_category(a.category);
  std::size_t variables = 0, duplicates = 0;
  for (const auto& f : a.files) {
    const auto conv = xpt::to_variable_tables(xpt::parse_file(f), a.id);
    duplicates += conv.duplicate_subjects;
    for (auto t : conv.tables) {
      t.category = category;
      save_variable_table(a.out, t);
      ++variables;
    }
  }
  if (duplicates) std::cerr << "warning: " << duplicates << " duplicate subject rows (last row kept)\n";
  std::cout << "wrote " << variables << " variables to " << a.out << '\n';
}

void run_xpt_dump(const std::string& file) {
  const auto doc = xpt::parse_file(file);
  for (const auto& m : doc.members) {
    std::cout << "member " << m.name << ": " << m.variables.size() << " variables, " << m.rows.size() << " rows";
    if (!m.label.empty()) std::cout << " (" << m.label << ")";
    std::cout << '\n';
    for (const auto& v : m.variables) {
      std::cout << "  " << std::left << std::setw(8) << v.name << ' '
                << (v.type == xpt::VarType::numeric ? "num " : "char") << " len=" << v.length << " pos=" << v.position;
      if (!v.label.empty()) std::cout << "  " << v.label;
      std::cout << '\n';
    }
  }
}

// ---- prepare ----

struct PrepareArgs {
  std::string task = "diabetes";
  std::string data;
  std::string out;
  std::uint64_t seed = 0;
  double tau_mi = 0.02;
  double tau_avail = 0.5;
  std::size_t mi_bins = 16;
  double train_fraction = 0.70;
  double validation_fraction = 0.15;
  std::string costs;
  std::string label_variable;
  std::size_t classes = 2;
  std::string features;
  std::string indicators;
  std::string config;
};

void run_prepare(const PrepareArgs& a) {
  require_path(a.data, "--data");
  if (!a.costs.empty()) require_path(a.costs, "--costs");
  auto task = task_by_name(a.task, a.label_variable, a.classes);
  if (a.task == "heart" && !a.indicators.empty()) task = heart_task(split_list(a.indicators));
  task.features = split_list(a.features);
  PrepConfig config;
  config.tau_mi = a.tau_mi;
  config.tau_avail = a.tau_avail;
  config.mi_bins = a.mi_bins;
  config.seed = a.seed;
  config.train_fraction = a.train_fraction;
  config.validation_fraction = a.validation_fraction;
  if (!a.costs.empty()) {
    std::ifstream in(a.costs);
    config.costs = CostTable::read_csv(in, a.costs);
  }
  const auto bundle = build_task(load_variable_dir(a.data), task, config);
  write_bundle(a.out, bundle);
  json run{{"command", "prepare"}, {"task", a.task}, {"data", a.data}, {"out", a.out}, {"seed", a.seed},
           {"tau_mi", a.tau_mi}, {"tau_avail", a.tau_avail}, {"mi_bins", a.mi_bins},
           {"train_fraction", a.train_fraction}, {"validation_fraction", a.validation_fraction},
           {"costs", a.costs}, {"label_variable", a.label_variable}, {"classes", a.classes},
           {"features", a.features}, {"indicators", a.indicators}};
  write_json(fs::path(a.out) / "run.json", run);
  for (const auto& w : bundle.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << a.task << ": " << bundle.data.size() << " subjects, " << bundle.data.catalog.size() << " features ("
            << bundle.splits.train.size() << '/' << bundle.splits.validation.size() << '/' << bundle.splits.test.size()
            << " train/validation/test)\n";
}

// ---- costs ----

struct CostsArgs {
  std::string survey;
  std::string out;
  std::string bundle;
  std::string config;
};

void run_costs(const CostsArgs& a) {
  require_path(a.survey, "--survey");
  const auto table = CostTable::from_survey(load_survey(a.survey));
  std::ostringstream text;
  table.write_csv(text);
  std::cout << text.str();
  if (!a.out.empty()) export_file(a.out, [&](std::ostream& o) { o << text.str(); });
  if (!a.bundle.empty()) {
    require_path(a.bundle, "--bundle");
    auto b = read_bundle(a.bundle);
    b.config.costs = table;
    b.data.catalog = assign_costs(b.data.catalog, table);
    write_bundle(a.bundle, b);
    std::cout << "restamped " << b.data.catalog.size() << " feature costs in " << a.bundle << '\n';
  }
}

// ---- train ----

struct TrainArgs {
  std::string bundle;
  std::string strategy = "ol";
  std::uint64_t seed = 0;
  std::string out;
  std::string config;
  double lambda = 1.0;
  double gamma = 1.0;
  std::size_t episodes = 2000;
  std::size_t epochs = 40;
  std::string ordering;
};

void run_train(TrainArgs a, const json* strategy_section, const CLI::App& cmd) {
  require_path(a.bundle, "--bundle");
  if (a.out.empty()) fail(ErrorCode::invalid_config, "--out is required");
  StrategySpec spec;
  if (strategy_section) apply_json(*strategy_section, spec);
  spec.kind = a.strategy;
  if (cmd.get_option("--lambda")->count()) spec.q.lambda = a.lambda;
  if (cmd.get_option("--gamma")->count()) spec.q.gamma = a.gamma;
  if (cmd.get_option("--episodes")->count()) spec.q.episodes = a.episodes;
  if (cmd.get_option("--epochs")->count()) spec.classifier.epochs = spec.dae.epochs = a.epochs;
  const auto bundle = read_bundle(a.bundle);
  if (!a.ordering.empty()) {
    spec.ordering.clear();
    for (const auto& name : split_list(a.ordering)) spec.ordering.push_back(bundle.data.catalog.index_of(name));
  }
  const auto trained = train_strategy(bundle.train(), spec, a.seed);
  export_file(a.out, [&](std::ostream& o) { o << to_json(trained).dump() << '\n'; });
  json run{{"command", "train"}, {"bundle", a.bundle}, {"strategy", to_json(trained.spec)}, {"seed", a.seed},
           {"out", a.out}, {"bundle_hashes", hash_tree(a.bundle)}, {"checkpoint_sha256", sha256_file(a.out)}};
  write_json(a.out + ".run.json", run);
  std::cout << "trained " << spec.kind << " on " << bundle.splits.train.size() << " rows -> " << a.out << '\n';
}

// ---- sweep ----

struct SweepArgs {
  std::string bundle;
  std::vector<std::string> checkpoints;
  std::string budgets = "0,2,4,6,8,10,15,20,inf";
  std::uint64_t seed = 0;
  std::string out = "results";
  std::string split = "test";
  std::size_t order_samples = 50;
  std::string order_budget = "inf";
  bool lambda_curve = false;
  bool disable_predict = false;
  std::string config;
};

void write_trajectories(std::ostream& out, const SweepResult& r) {
  out << "control,episode_id,step,feature_index,cost,spent_after\n";
  for (const auto& p : r.points) {
    for (const auto& s : p.log) {
      out << p.control << ',' << s.episode_id << ',' << s.step << ',' << s.feature_index << ',' << s.cost.str() << ','
          << s.spent_after.str() << '\n';
    }
  }
}

void run_sweep(const SweepArgs& a) {
  require_path(a.bundle, "--bundle");
  if (a.checkpoints.empty()) fail(ErrorCode::invalid_config, "at least one --checkpoint is required");
  for (const auto& c : a.checkpoints) require_path(c, "--checkpoint");
  const auto bundle = read_bundle(a.bundle);
  Dataset data;
  if (a.split == "test") data = bundle.test();
  else if (a.split == "validation") data = bundle.validation();
  else if (a.split == "train") data = bundle.train();
  else fail(ErrorCode::invalid_config, "unknown split '" + a.split + "'");
  std::vector<Cost> budgets;
  for (const auto& b : split_list(a.budgets)) budgets.push_back(parse_budget(b));
  if (budgets.empty() && !a.lambda_curve) fail(ErrorCode::invalid_config, "no budgets given");
  const auto order_rule = TerminationRule::budget(parse_budget(a.order_budget));

  std::vector<std::pair<std::string, TrainedStrategy>> trained;
  for (const auto& c : a.checkpoints) {
    auto t = load_strategy(c);
    if (t.catalog.size() != bundle.data.catalog.size()) {
      fail(ErrorCode::dimension_mismatch, c + " was trained on a different feature set");
    }
    if (a.disable_predict && t.q) t.q->disable_predict(true);
    trained.emplace_back(c, std::move(t));
  }

  struct Job {
    std::string name;
    SweepResult result;
    std::vector<std::string> checkpoints;
    const TrainedStrategy* representative;
  };
  std::vector<Job> jobs;
  if (a.lambda_curve) {
    std::vector<std::pair<std::string, TrainedStrategy>> runs;
    std::vector<std::string> paths;
    for (const auto& [path, t] : trained) {
      runs.emplace_back(csv::format_double(t.spec.q.lambda), t);
      paths.push_back(path);
    }
    auto r = sweep_policies(runs, data, a.seed);
    jobs.push_back({r.strategy + "-lambda", std::move(r), paths, &trained.front().second});
  } else {
    std::set<std::string> names;
    for (const auto& [path, t] : trained) {
      if (!names.insert(t.spec.kind).second) {
        fail(ErrorCode::invalid_config, "two checkpoints for strategy '" + t.spec.kind + "'; use --lambda-curve or separate runs");
      }
      jobs.push_back({t.spec.kind, sweep_budgets(t, data, budgets, a.seed), {path}, &t});
    }
  }

  const auto importance = logistic_importance(bundle.train(), {}, a.seed);
  const fs::path task_dir = fs::path(a.out) / bundle.task_name;
  std::vector<SweepResult> all;
  for (const auto& job : jobs) {
    const auto dir = task_dir / job.name;
    const auto& t = *job.representative;
    export_file(dir / "sweep.csv", [&](std::ostream& o) { write_sweep_csv(o, {job.result}); });
    export_file(dir / "sweep.json", [&](std::ostream& o) { o << sweep_json({job.result}).dump(2) << '\n'; });
    export_file(dir / "curve.svg", [&](std::ostream& o) { write_curve_svg(o, {job.result}, bundle.task_name); });
    export_file(dir / "trajectories.csv", [&](std::ostream& o) { write_trajectories(o, job.result); });
    const auto matrix = order_matrix(*t.policy(data.catalog), *t.predictor(), data, a.order_samples, order_rule, a.seed);
    export_file(dir / "order_matrix.csv", [&](std::ostream& o) { write_order_matrix_csv(o, matrix); });
    export_file(dir / "order_matrix.svg", [&](std::ostream& o) { write_order_matrix_svg(o, matrix); });
    export_file(dir / "importance.csv", [&](std::ostream& o) { write_importance_csv(o, importance); });
    json checkpoints = json::object();
    for (const auto& c : job.checkpoints) checkpoints[c] = sha256_file(c);
    json config{{"bundle", a.bundle}, {"checkpoints", job.checkpoints}, {"budgets", a.budgets}, {"seed", a.seed},
                {"out", a.out}, {"split", a.split}, {"order_samples", a.order_samples},
                {"order_budget", a.order_budget}, {"lambda_curve", a.lambda_curve},
                {"disable_predict", a.disable_predict}};
    auto outputs = hash_tree(dir);
    outputs.erase("manifest.json");
    write_json(dir / "manifest.json", {{"command", "sweep"},
                                       {"config", config},
                                       {"seeds", {{"sweep", a.seed}, {"training", t.seed}, {"bundle", bundle.config.seed}}},
                                       {"checkpoint_sha256", checkpoints},
                                       {"bundle_sha256", hash_tree(a.bundle)},
                                       {"outputs_sha256", outputs}});
    all.push_back(job.result);
    std::cout << job.name << ":\n";
    for (const auto& p : job.result.points) {
      std::cout << "  " << job.result.control_kind << '=' << p.control << "  mean_cost=" << csv::format_double(p.mean_cost)
                << "  accuracy=" << csv::format_double(p.accuracy) << '\n';
    }
  }
  export_file(task_dir / "sweep.csv", [&](std::ostream& o) { write_sweep_csv(o, all); });
  export_file(task_dir / "curve.svg", [&](std::ostream& o) { write_curve_svg(o, all, bundle.task_name); });
}

// ---- session ----

struct SessionArgs {
  std::string bundle;
  std::string checkpoint;
  std::string budget = "inf";
  std::uint64_t seed = 0;
  std::string free;
  std::string config;
};

void show(const Classifier& clf, const AcquisitionState& s, std::size_t mc, std::uint64_t seed) {
  const auto p = clf.probabilities(s);
  std::cout << "prediction: " << nn::argmax(p) << "  p=[";
  for (std::size_t c = 0; c < p.size(); ++c) std::cout << (c ? "," : "") << csv::format_double(p[c]);
  std::cout << "]  certainty: " << csv::format_double(clf.certainty(s, mc, seed)) << "  spent: " << s.spent.str() << '\n';
}

void run_session(const SessionArgs& a) {
  require_path(a.bundle, "--bundle");
  require_path(a.checkpoint, "--checkpoint");
  const auto bundle = read_bundle(a.bundle);
  const auto trained = load_strategy(a.checkpoint);
  const auto& catalog = bundle.data.catalog;
  if (trained.catalog.size() != catalog.size()) fail(ErrorCode::dimension_mismatch, "checkpoint does not match bundle");
  const auto rule = TerminationRule::budget(parse_budget(a.budget));
  const auto policy = trained.policy(catalog);
  const auto& clf = *trained.predictor();
  const auto mc = trained.spec.classifier.mc_samples;

  Mask k0(catalog.size(), 0);
  std::vector<double> seed_row(catalog.encoded_width(), 0.0);
  auto state = AcquisitionState::start(catalog);
  // free-at-start features are read first, before any spending
  for (const auto& name : split_list(a.free)) {
    const auto j = catalog.index_of(name);
    std::cout << "free: " << name << "> " << std::flush;
    std::string line;
    if (!std::getline(std::cin, line)) break;
    k0[j] = 1;
    if (line != "skip") {
      const auto v = bundle.encode_value(j, parse_cell(line));
      std::copy(v.begin(), v.end(), seed_row.begin() + static_cast<long>(catalog.offset(j)));
    }
  }
  state = AcquisitionState::start(catalog, seed_row, k0);
  check_invariants(state, catalog);
  std::cout << "budget: " << rule.budget_limit().str() << "  strategy: " << trained.spec.kind << '\n';
  show(clf, state, mc, mix_seed(a.seed, state.step));
  Rng rng(a.seed);
  while (true) {
    if (is_terminal(state, rule, 0.0, catalog)) {
      if (available_actions(state).empty()) {
        std::cout << "all features acquired\n";
      } else {
        std::cout << "refused: the cheapest remaining feature would exceed the budget (spent " << state.spent.str()
                  << " of " << rule.budget_limit().str() << ")\n";
      }
      break;
    }
    Mask allowed(catalog.size(), 0);
    for (std::size_t j = 0; j < catalog.size(); ++j) allowed[j] = !state.acquired[j] && rule.affordable(state, j, catalog);
    const auto decision = policy->select(state, allowed, rng);
    if (decision.kind != Decision::Kind::acquire) {
      std::cout << "strategy stops\n";
      break;
    }
    const auto j = decision.feature;
    std::cout << "next: " << catalog[j].name << " (" << to_string(catalog[j].category) << ", cost "
              << catalog.cost(j).str() << ")> " << std::flush;
    std::string line;
    if (!std::getline(std::cin, line) || line == "stop") {
      std::cout << "\nstopped\n";
      break;
    }
    std::vector<double> value(catalog.width(j), 0.0);
    if (line != "skip") {
      try {
        value = bundle.encode_value(j, parse_cell(line));
      } catch (const Error& e) {
        std::cout << "could not read value: " << e.what() << '\n';
        continue;
      }
    }
    state = query(state, j, value, catalog);
    check_invariants(state, catalog);
    show(clf, state, mc, mix_seed(a.seed, state.step));
  }
  std::cout << "final ";
  show(clf, state, mc, mix_seed(a.seed, state.step + 1));
}

// ---- inspect ----

struct InspectArgs {
  std::string bundle;
  std::string checkpoint;
};

void run_inspect(const InspectArgs& a) {
  if (a.bundle.empty() && a.checkpoint.empty()) fail(ErrorCode::invalid_config, "give --bundle and/or --checkpoint");
  if (!a.bundle.empty()) {
    require_path(a.bundle, "--bundle");
    const auto b = read_bundle(a.bundle);
    std::cout << "task: " << b.task_name << "  classes: " << b.data.num_classes << "  rows: " << b.data.size()
              << "  seed: " << b.config.seed << '\n';
    std::cout << "splits: " << b.splits.train.size() << '/' << b.splits.validation.size() << '/' << b.splits.test.size()
              << '\n';
    b.data.catalog.write_csv(std::cout);
    for (const auto& w : b.warnings) std::cout << "warning: " << w << '\n';
  }
  if (!a.checkpoint.empty()) {
    require_path(a.checkpoint, "--checkpoint");
    const auto t = load_strategy(a.checkpoint);
    std::cout << "strategy: " << t.spec.kind << "  seed: " << t.seed << '\n';
    std::cout << to_json(t.spec).dump(2) << '\n';
    t.catalog.write_csv(std::cout);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cost-sensitive feature acquisition: prepare data, train strategies, sweep budgets."};
  app.require_subcommand(1);
  std::function<void()> action;

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Write a synthetic per-variable data directory");
  auto* o_synth_kind = c_synth->add_option("--kind", synth.kind, "survey | toy | informative | tradeoff")->capture_default_str();
  auto* o_synth_n = c_synth->add_option("--subjects", synth.subjects, "Number of subjects")->capture_default_str();
  auto* o_synth_seed = c_synth->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
  auto* o_synth_out = c_synth->add_option("--out", synth.out, "Output directory");
  c_synth->add_option("--config", synth.config, "JSON config; flags override its values");
  c_synth->callback([&] {
    action = [&] {
      Overlay o(synth.config);
      o.take("kind", synth.kind, o_synth_kind).take("subjects", synth.subjects, o_synth_n);
      o.take("seed", synth.seed, o_synth_seed).take("out", synth.out, o_synth_out);
      o.section("command");
      o.finish();
      if (synth.out.empty()) fail(ErrorCode::invalid_config, "--out is required");
      run_synth(synth);
    };
  });

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Convert XPT files into a per-variable data directory");
  c_ingest->add_option("--xpt", ingest.files, "XPT file(s)")->required()->check(CLI::ExistingFile);
  c_ingest->add_option("--category", ingest.category, "demographics | questionnaire | examination | laboratory")->required();
  c_ingest->add_option("--id", ingest.id, "Subject id variable")->capture_default_str();
  c_ingest->add_option("--out", ingest.out, "Output directory")->required();
  c_ingest->callback([&] {
    action = [&] {
      try {
        parse_category(ingest.category);
      } catch (const Error&) {
        fail(ErrorCode::invalid_config, "unknown category '" + ingest.category + "'");
      }
      run_ingest(ingest);
    };
  });

  std::string xpt_file;
  auto* c_xpt = app.add_subcommand("xpt", "XPT utilities");
  c_xpt->require_subcommand(1);
  auto* c_dump = c_xpt->add_subcommand("dump", "Print the member and variable inventory of an XPT file");
  c_dump->add_option("file", xpt_file, "XPT file")->required()->check(CLI::ExistingFile);
  c_dump->callback([&] { action = [&] { run_xpt_dump(xpt_file); }; });

  PrepareArgs prep;
  auto* c_prep = app.add_subcommand("prepare", "Build a task dataset bundle from a per-variable data directory");
  auto* o_task = c_prep->add_option("--task", prep.task, "diabetes | heart | hypertension | custom")->capture_default_str();
  auto* o_data = c_prep->add_option("--data", prep.data, "Per-variable data directory");
  auto* o_pout = c_prep->add_option("--out", prep.out, "Bundle output directory");
  auto* o_pseed = c_prep->add_option("--seed", prep.seed, "Split seed")->capture_default_str();
  auto* o_tmi = c_prep->add_option("--tau-mi", prep.tau_mi, "Mutual-information threshold (nats)")->capture_default_str();
  auto* o_tav = c_prep->add_option("--tau-avail", prep.tau_avail, "Availability threshold")->capture_default_str();
  auto* o_bins = c_prep->add_option("--mi-bins", prep.mi_bins, "Histogram bins for mutual information")->capture_default_str();
  auto* o_trf = c_prep->add_option("--train-fraction", prep.train_fraction, "Training share")->capture_default_str();
  auto* o_vaf = c_prep->add_option("--validation-fraction", prep.validation_fraction, "Validation share")->capture_default_str();
  auto* o_costs = c_prep->add_option("--costs", prep.costs, "Cost table CSV (category,cost); default 2/4/5/9");
  auto* o_label = c_prep->add_option("--label-variable", prep.label_variable, "Label variable for --task custom");
  auto* o_classes = c_prep->add_option("--classes", prep.classes, "Class count for --task custom")->capture_default_str();
  auto* o_feats = c_prep->add_option("--features", prep.features, "Comma-separated feature list (skips automatic selection)");
  auto* o_ind = c_prep->add_option("--indicators", prep.indicators, "Comma-separated heart-disease indicator variables");
  c_prep->add_option("--config", prep.config, "JSON config; flags override its values");
  c_prep->callback([&] {
    action = [&] {
      Overlay o(prep.config);
      o.take("task", prep.task, o_task).take("data", prep.data, o_data).take("out", prep.out, o_pout);
      o.take("seed", prep.seed, o_pseed).take("tau_mi", prep.tau_mi, o_tmi).take("tau_avail", prep.tau_avail, o_tav);
      o.take("mi_bins", prep.mi_bins, o_bins).take("train_fraction", prep.train_fraction, o_trf);
      o.take("validation_fraction", prep.validation_fraction, o_vaf).take("costs", prep.costs, o_costs);
      o.take("label_variable", prep.label_variable, o_label).take("classes", prep.classes, o_classes);
      o.take("features", prep.features, o_feats).take("indicators", prep.indicators, o_ind);
      o.section("command");
      o.finish();
      if (prep.out.empty()) fail(ErrorCode::invalid_config, "--out is required");
      run_prepare(prep);
    };
  });

  CostsArgs costs;
  auto* c_costs = app.add_subcommand("costs", "Derive the category cost table from survey responses");
  auto* o_survey = c_costs->add_option("--survey", costs.survey, "Survey CSV (respondent_id,q1,q2,q3,q4)");
  auto* o_cout = c_costs->add_option("--out", costs.out, "Write the cost table CSV here");
  auto* o_cb = c_costs->add_option("--bundle", costs.bundle, "Restamp the catalog costs of this bundle");
  c_costs->add_option("--config", costs.config, "JSON config; flags override its values");
  c_costs->callback([&] {
    action = [&] {
      Overlay o(costs.config);
      o.take("survey", costs.survey, o_survey).take("out", costs.out, o_cout).take("bundle", costs.bundle, o_cb);
      o.finish();
      run_costs(costs);
    };
  });

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Train one strategy on a bundle's training split");
  auto* o_tb = c_train->add_option("--bundle", train.bundle, "Dataset bundle directory");
  auto* o_ts = c_train->add_option("--strategy", train.strategy, "exhaustive | fact | rl | ol | random | static")->capture_default_str();
  auto* o_tseed = c_train->add_option("--seed", train.seed, "Training seed")->capture_default_str();
  auto* o_tout = c_train->add_option("--out", train.out, "Checkpoint path (JSON)");
  c_train->add_option("--lambda", train.lambda, "Misclassification penalty for rl");
  c_train->add_option("--gamma", train.gamma, "Discount factor for rl/ol");
  c_train->add_option("--episodes", train.episodes, "Q-learning episodes");
  c_train->add_option("--epochs", train.epochs, "Classifier and autoencoder epochs");
  auto* o_tord = c_train->add_option("--ordering", train.ordering, "Comma-separated feature names for static");
  c_train->add_option("--config", train.config, "JSON config; flags override its values");
  c_train->callback([&] {
    action = [&] {
      Overlay o(train.config);
      o.take("bundle", train.bundle, o_tb).take("seed", train.seed, o_tseed).take("out", train.out, o_tout);
      o.take("ordering", train.ordering, o_tord);
      const json* section = o.section("strategy");
      for (const char* k : {"command", "bundle_hashes", "checkpoint_sha256"}) o.section(k);
      o.finish();
      json strategy = section ? *section : json::object();
      if (!o_ts->count() && strategy.contains("kind")) train.strategy = strategy["kind"].get<std::string>();
      run_train(train, &strategy, *c_train);
    };
  });

  SweepArgs sweep;
  auto* c_sweep = app.add_subcommand("sweep", "Accuracy-versus-cost sweeps, order matrices and importance reports");
  auto* o_sb = c_sweep->add_option("--bundle", sweep.bundle, "Dataset bundle directory");
  auto* o_sc = c_sweep->add_option("--checkpoint", sweep.checkpoints, "Strategy checkpoint(s)");
  auto* o_sbud = c_sweep->add_option("--budgets", sweep.budgets, "Comma-separated budgets; inf = unlimited")->capture_default_str();
  auto* o_sseed = c_sweep->add_option("--seed", sweep.seed, "Evaluation seed")->capture_default_str();
  auto* o_sout = c_sweep->add_option("--out", sweep.out, "Results root")->capture_default_str();
  auto* o_ssplit = c_sweep->add_option("--split", sweep.split, "test | validation | train")->capture_default_str();
  auto* o_sos = c_sweep->add_option("--order-samples", sweep.order_samples, "Episodes in the order matrix")->capture_default_str();
  auto* o_sob = c_sweep->add_option("--order-budget", sweep.order_budget, "Budget for the order matrix")->capture_default_str();
  auto* o_slc = c_sweep->add_flag("--lambda-curve", sweep.lambda_curve, "Treat checkpoints as points of one lambda curve");
  auto* o_sdp = c_sweep->add_flag("--disable-predict", sweep.disable_predict, "rl policies keep acquiring while budget allows");
  c_sweep->add_option("--config", sweep.config, "JSON config; flags override its values");
  c_sweep->callback([&] {
    action = [&] {
      Overlay o(sweep.config);
      // a sweep manifest can be passed back as its own config
      Overlay* src = &o;
      std::unique_ptr<Overlay> nested;
      if (const auto* c = o.section("config")) {
        nested = std::make_unique<Overlay>(*c);
        src = nested.get();
        for (const char* k : {"command", "seeds", "checkpoint_sha256", "bundle_sha256", "outputs_sha256"}) o.section(k);
      }
      src->take("bundle", sweep.bundle, o_sb).take("checkpoints", sweep.checkpoints, o_sc);
      src->take("budgets", sweep.budgets, o_sbud).take("seed", sweep.seed, o_sseed).take("out", sweep.out, o_sout);
      src->take("split", sweep.split, o_ssplit).take("order_samples", sweep.order_samples, o_sos);
      src->take("order_budget", sweep.order_budget, o_sob).take("lambda_curve", sweep.lambda_curve, o_slc);
      src->take("disable_predict", sweep.disable_predict, o_sdp);
      src->finish();
      if (nested) o.finish();
      run_sweep(sweep);
    };
  });

  SessionArgs session;
  auto* c_session = app.add_subcommand("session", "Step through one instance interactively (values on stdin)");
  auto* o_xb = c_session->add_option("--bundle", session.bundle, "Dataset bundle directory");
  auto* o_xc = c_session->add_option("--checkpoint", session.checkpoint, "Strategy checkpoint");
  auto* o_xbud = c_session->add_option("--budget", session.budget, "Budget; inf = unlimited")->capture_default_str();
  auto* o_xseed = c_session->add_option("--seed", session.seed, "Seed for stochastic policies")->capture_default_str();
  auto* o_xfree = c_session->add_option("--free", session.free, "Comma-separated features known at no cost");
  c_session->add_option("--config", session.config, "JSON config; flags override its values");
  c_session->callback([&] {
    action = [&] {
      Overlay o(session.config);
      o.take("bundle", session.bundle, o_xb).take("checkpoint", session.checkpoint, o_xc);
      o.take("budget", session.budget, o_xbud).take("seed", session.seed, o_xseed).take("free", session.free, o_xfree);
      o.finish();
      run_session(session);
    };
  });

  InspectArgs inspect;
  auto* c_inspect = app.add_subcommand("inspect", "Print a bundle's catalog and manifest or a checkpoint's settings");
  c_inspect->add_option("--bundle", inspect.bundle, "Dataset bundle directory");
  c_inspect->add_option("--checkpoint", inspect.checkpoint, "Strategy checkpoint");
  c_inspect->callback([&] { action = [&] { run_inspect(inspect); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }
  try {
    action();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return is_config_error(e.code()) ? kConfigError : kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return 0;
}
