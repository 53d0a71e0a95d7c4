#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "costacq/csv.hpp"
#include "costacq/dataset.hpp"
#include "costacq/models.hpp"
#include "costacq/strategy.hpp"
#include "costacq/trajectory.hpp"

namespace costacq {

struct SweepPoint {
  std::string control;  // budget ("inf" when unlimited) or lambda, as written
  Cost total_cost;      // summed over episodes, exact
  double mean_cost = 0.0;
  double accuracy = 0.0;
  std::size_t n_episodes = 0;
  std::vector<double> per_class_recall;  // NaN for classes absent from the split
  std::vector<TrajectoryStep> log;
};

struct SweepResult {
  std::string strategy;
  std::string task;
  std::uint64_t seed = 0;
  std::string control_kind = "budget";  // or "lambda"
  std::vector<SweepPoint> points;

  void sort_points() {
    std::stable_sort(points.begin(), points.end(),
                     [](const SweepPoint& a, const SweepPoint& b) { return a.mean_cost < b.mean_cost; });
  }
};

// Runs every row of `data` once under `rule`.
inline SweepPoint evaluate_point(const Strategy& policy, const Classifier& predictor, const Dataset& data,
                                 const TerminationRule& rule, std::uint64_t seed, const Mask& free_at_start = {},
                                 std::size_t mc_samples = 30) {
  if (data.size() == 0) fail(ErrorCode::insufficient_data, "no episodes to run");
  SweepPoint p;
  std::size_t correct = 0;
  std::vector<std::size_t> hits(data.num_classes, 0), seen(data.num_classes, 0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    EpisodeOptions opt;
    opt.free_at_start = free_at_start;
    opt.seed = mix_seed(seed, i);
    opt.mc_samples = mc_samples;
    const auto r = run_episode(policy, data.rows[i], data.labels[i], data.catalog, rule, predictor, opt);
    correct += r.correct;
    const auto y = static_cast<std::size_t>(data.labels[i]);
    seen[y] += 1;
    hits[y] += r.correct;
    p.total_cost += r.total_cost;
    const auto steps = trajectory_of(r, i);
    p.log.insert(p.log.end(), steps.begin(), steps.end());
  }
  p.n_episodes = data.size();
  p.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  p.mean_cost = p.total_cost.to_double() / static_cast<double>(data.size());
  for (std::size_t c = 0; c < data.num_classes; ++c) {
    p.per_class_recall.push_back(seen[c] ? static_cast<double>(hits[c]) / static_cast<double>(seen[c]) : std::nan(""));
  }
  return p;
}

inline void require_trained(const TrainedStrategy& t) {
  if (!t.predictor()) fail(ErrorCode::untrained_strategy, t.spec.kind + " has no trained predictor");
  if ((t.spec.kind == "rl" || t.spec.kind == "ol") && !t.q) fail(ErrorCode::untrained_strategy, "missing Q network");
  if (t.spec.kind == "fact" && !t.dae) fail(ErrorCode::untrained_strategy, "missing autoencoder");
  if (t.spec.kind == "exhaustive" && !t.store) fail(ErrorCode::untrained_strategy, "missing reference store");
}

// One point per budget; costs follow `data.catalog`.
inline SweepResult sweep_budgets(const TrainedStrategy& trained, const Dataset& data, const std::vector<Cost>& budgets,
                                 std::uint64_t seed, const Mask& free_at_start = {}) {
  require_trained(trained);
  SweepResult out;
  out.strategy = trained.spec.kind;
  out.task = data.task_name;
  out.seed = seed;
  const auto policy = trained.policy(data.catalog);
  for (const auto& b : budgets) {
    auto p = evaluate_point(*policy, *trained.predictor(), data, TerminationRule::budget(b), seed, free_at_start,
                            trained.spec.classifier.mc_samples);
    p.control = b.str();
    out.points.push_back(std::move(p));
  }
  out.sort_points();
  return out;
}

// One point per separately trained policy (the lambda curve), each run
// without a budget.
inline SweepResult sweep_policies(const std::vector<std::pair<std::string, TrainedStrategy>>& policies,
                                  const Dataset& data, std::uint64_t seed, const Mask& free_at_start = {}) {
  if (policies.empty()) fail(ErrorCode::empty_results, "no policies to sweep");
  SweepResult out;
  out.strategy = policies.front().second.spec.kind;
  out.task = data.task_name;
  out.seed = seed;
  out.control_kind = "lambda";
  for (const auto& [control, trained] : policies) {
    require_trained(trained);
    auto p = evaluate_point(*trained.policy(data.catalog), *trained.predictor(), data, TerminationRule::unlimited(),
                            seed, free_at_start, trained.spec.classifier.mc_samples);
    p.control = control;
    out.points.push_back(std::move(p));
  }
  out.sort_points();
  return out;
}

// ---- acquisition orders ----

struct OrderMatrix {
  std::vector<std::size_t> columns;  // feature indices grouped by category
  std::vector<std::string> names;
  std::vector<Category> categories;
  std::vector<std::vector<std::optional<int>>> ranks;  // episode x column
};

inline std::vector<std::size_t> category_grouped(const FeatureCatalog& catalog) {
  std::vector<std::size_t> cols;
  for (auto cat : kAllCategories) {
    for (std::size_t j = 0; j < catalog.size(); ++j) {
      if (catalog[j].category == cat) cols.push_back(j);
    }
  }
  return cols;
}

inline OrderMatrix order_matrix(const Strategy& policy, const Classifier& predictor, const Dataset& data,
                                std::size_t samples, const TerminationRule& rule, std::uint64_t seed) {
  if (samples == 0) fail(ErrorCode::invalid_config, "order matrix needs at least one sample");
  if (data.size() == 0) fail(ErrorCode::insufficient_data, "no rows to sample");
  OrderMatrix m;
  m.columns = category_grouped(data.catalog);
  for (auto j : m.columns) {
    m.names.push_back(data.catalog[j].name);
    m.categories.push_back(data.catalog[j].category);
  }
  std::vector<std::size_t> position(data.catalog.size());
  for (std::size_t c = 0; c < m.columns.size(); ++c) position[m.columns[c]] = c;
  Rng rng(seed);
  for (std::size_t s = 0; s < samples; ++s) {
    const auto i = rng.index(data.size());
    EpisodeOptions opt;
    opt.seed = mix_seed(seed, s);
    const auto r = run_episode(policy, data.rows[i], data.labels[i], data.catalog, rule, predictor, opt);
    std::vector<std::optional<int>> row(m.columns.size());
    for (std::size_t t = 0; t < r.order.size(); ++t) row[position[r.order[t]]] = static_cast<int>(t + 1);
    m.ranks.push_back(std::move(row));
  }
  return m;
}

inline void write_order_matrix_csv(std::ostream& out, const OrderMatrix& m) {
  out << "episode";
  for (std::size_t c = 0; c < m.names.size(); ++c) out << ',' << to_string(m.categories[c]) << ':' << m.names[c];
  out << '\n';
  for (std::size_t e = 0; e < m.ranks.size(); ++e) {
    out << e;
    for (const auto& r : m.ranks[e]) {
      out << ',';
      if (r) out << *r;
    }
    out << '\n';
  }
}

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

}  // namespace detail

// Rank heat map: earlier acquisitions are darker.
inline void write_order_matrix_svg(std::ostream& out, const OrderMatrix& m) {
  const int cell = 12, left = 40, top = 110;
  const int width = left + cell * static_cast<int>(m.columns.size()) + 20;
  const int height = top + cell * static_cast<int>(m.ranks.size()) + 20;
  int max_rank = 1;
  for (const auto& row : m.ranks)
    for (const auto& r : row)
      if (r) max_rank = std::max(max_rank, *r);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  for (std::size_t c = 0; c < m.names.size(); ++c) {
    const int x = left + cell * static_cast<int>(c) + cell / 2;
    out << "<text transform=\"translate(" << x << "," << top - 4 << ") rotate(-60)\" font-size=\"8\">"
        << detail::xml_escape(m.names[c]) << "</text>\n";
  }
  for (std::size_t e = 0; e < m.ranks.size(); ++e) {
    for (std::size_t c = 0; c < m.ranks[e].size(); ++c) {
      const auto& r = m.ranks[e][c];
      int shade = 245;
      if (r) shade = static_cast<int>(30 + 190.0 * (*r - 1) / std::max(1, max_rank - 1));
      out << "<rect x=\"" << left + cell * static_cast<int>(c) << "\" y=\"" << top + cell * static_cast<int>(e)
          << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\"rgb(" << shade << ',' << shade << ",255)\"/>\n";
    }
  }
  out << "</svg>\n";
}

// ---- feature importance ----

struct Importance {
  std::string feature;
  double importance = 0.0;
};

struct ImportanceConfig {
  double l2 = 1e-3;
  std::size_t epochs = 100;
  nn::AdamConfig adam{0.01};
};

// Softmax regression on all available values; importance of a feature is its
// mean absolute weight over encoded columns and classes, scaled so the top
// feature scores 1.
inline std::vector<Importance> logistic_importance(const Dataset& data, const ImportanceConfig& config,
                                                   std::uint64_t seed) {
  if (data.size() == 0) fail(ErrorCode::insufficient_data, "no rows");
  Rng rng(seed);
  auto net = nn::DenseNet::mlp(data.catalog.encoded_width(), {}, data.num_classes, nn::Activation::softmax, 0.0, rng);
  auto adam_config = config.adam;
  adam_config.weight_decay = config.l2;
  nn::Adam adam(net, adam_config);
  std::vector<nn::Example> examples;
  for (std::size_t i = 0; i < data.size(); ++i) {
    examples.push_back({data.rows[i], one_hot_target(data.labels[i], data.num_classes), {}});
  }
  try {
    for (std::size_t e = 0; e < config.epochs; ++e) nn::train_epoch(net, examples, nn::Loss::cross_entropy, adam, rng);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::non_finite_loss) fail(ErrorCode::training_diverged, e.what());
    throw;
  }
  const auto& layer = net.layers().front();
  std::vector<Importance> out;
  double top = 0.0;
  for (std::size_t j = 0; j < data.catalog.size(); ++j) {
    double s = 0.0;
    for (std::size_t o = 0; o < layer.out; ++o) {
      for (auto c = data.catalog.offset(j); c < data.catalog.offset(j) + data.catalog.width(j); ++c) {
        s += std::abs(layer.w(o, c));
      }
    }
    s /= static_cast<double>(layer.out * data.catalog.width(j));
    if (!std::isfinite(s)) fail(ErrorCode::training_diverged, "non-finite weight");
    top = std::max(top, s);
    out.push_back({data.catalog[j].name, s});
  }
  if (top > 0.0) {
    for (auto& imp : out) imp.importance /= top;
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.importance > b.importance; });
  return out;
}

inline void write_importance_csv(std::ostream& out, const std::vector<Importance>& ranked) {
  out << "rank,feature,importance\n";
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    out << r + 1 << ',' << ranked[r].feature << ',' << csv::format_double(ranked[r].importance) << '\n';
  }
}

// ---- export ----

inline std::string join_recall(const std::vector<double>& v) {
  std::string s;
  for (std::size_t c = 0; c < v.size(); ++c) s += (c ? ";" : "") + (std::isnan(v[c]) ? std::string("nan") : csv::format_double(v[c]));
  return s;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepResult>& results) {
  if (results.empty()) fail(ErrorCode::empty_results, "nothing to export");
  out << "strategy,task,seed,control_kind,control,total_cost,mean_cost,accuracy,n_episodes,per_class_recall\n";
  for (const auto& r : results) {
    for (const auto& p : r.points) {
      out << r.strategy << ',' << r.task << ',' << r.seed << ',' << r.control_kind << ',' << p.control << ','
          << p.total_cost.str() << ',' << csv::format_double(p.mean_cost) << ',' << csv::format_double(p.accuracy)
          << ',' << p.n_episodes << ',' << join_recall(p.per_class_recall) << '\n';
    }
  }
}

inline std::vector<SweepResult> read_sweep_csv(std::istream& in) {
  const auto t = csv::parse(in, "sweep");
  const auto c_s = t.column("strategy"), c_t = t.column("task"), c_seed = t.column("seed"),
             c_k = t.column("control_kind"), c_c = t.column("control"), c_tc = t.column("total_cost"),
             c_m = t.column("mean_cost"), c_a = t.column("accuracy"), c_n = t.column("n_episodes"),
             c_r = t.column("per_class_recall");
  std::vector<SweepResult> out;
  for (const auto& row : t.rows) {
    const auto seed = static_cast<std::uint64_t>(csv::parse_int(row[c_seed]));
    if (out.empty() || out.back().strategy != row[c_s] || out.back().task != row[c_t] || out.back().seed != seed ||
        out.back().control_kind != row[c_k]) {
      out.push_back({row[c_s], row[c_t], seed, row[c_k], {}});
    }
    SweepPoint p;
    p.control = row[c_c];
    p.total_cost = Cost::parse(row[c_tc]);
    p.mean_cost = csv::parse_double(row[c_m]);
    p.accuracy = csv::parse_double(row[c_a]);
    p.n_episodes = static_cast<std::size_t>(csv::parse_int(row[c_n]));
    for (const auto& v : csv::split(row[c_r], ';')) {
      if (!v.empty()) p.per_class_recall.push_back(v == "nan" ? std::nan("") : csv::parse_double(v));
    }
    out.back().points.push_back(std::move(p));
  }
  return out;
}

inline nlohmann::json sweep_json(const std::vector<SweepResult>& results) {
  if (results.empty()) fail(ErrorCode::empty_results, "nothing to export");
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : results) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : r.points) {
      nlohmann::json recall = nlohmann::json::array();
      for (double v : p.per_class_recall) recall.push_back(std::isnan(v) ? nlohmann::json() : nlohmann::json(v));
      pts.push_back({{"control", p.control}, {"total_cost", p.total_cost.str()}, {"mean_cost", p.mean_cost},
                     {"accuracy", p.accuracy}, {"n_episodes", p.n_episodes}, {"per_class_recall", recall}});
    }
    arr.push_back({{"strategy", r.strategy}, {"task", r.task}, {"seed", r.seed}, {"control_kind", r.control_kind},
                   {"points", pts}});
  }
  return arr;
}

// Accuracy-versus-cost chart, one polyline per result.
inline void write_curve_svg(std::ostream& out, const std::vector<SweepResult>& results, const std::string& title = "") {
  if (results.empty()) fail(ErrorCode::empty_results, "nothing to plot");
  const double w = 640, h = 420, l = 60, r = 150, t = 40, b = 50;
  double max_cost = 0.0;
  for (const auto& res : results)
    for (const auto& p : res.points) max_cost = std::max(max_cost, p.mean_cost);
  if (max_cost <= 0.0) max_cost = 1.0;
  auto X = [&](double c) { return l + (w - l - r) * c / max_cost; };
  auto Y = [&](double a) { return h - b - (h - t - b) * a; };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" font-family=\"sans-serif\">\n";
  if (!title.empty()) out << "<text x=\"" << l << "\" y=\"24\" font-size=\"14\">" << detail::xml_escape(title) << "</text>\n";
  out << "<line x1=\"" << l << "\" y1=\"" << Y(0) << "\" x2=\"" << w - r << "\" y2=\"" << Y(0) << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << l << "\" y1=\"" << Y(0) << "\" x2=\"" << l << "\" y2=\"" << Y(1) << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double a = k / 5.0, c = max_cost * k / 5.0;
    out << "<text x=\"" << l - 8 << "\" y=\"" << Y(a) + 4 << "\" font-size=\"10\" text-anchor=\"end\">" << detail::fmt(a, 2) << "</text>\n";
    out << "<text x=\"" << X(c) << "\" y=\"" << Y(0) + 16 << "\" font-size=\"10\" text-anchor=\"middle\">" << detail::fmt(c, 3) << "</text>\n";
  }
  out << "<text x=\"" << (l + w - r) / 2 << "\" y=\"" << h - 12 << "\" font-size=\"12\" text-anchor=\"middle\">mean cost</text>\n";
  out << "<text transform=\"translate(16," << (t + h - b) / 2 << ") rotate(-90)\" font-size=\"12\" text-anchor=\"middle\">accuracy</text>\n";
  for (std::size_t s = 0; s < results.size(); ++s) {
    const auto& res = results[s];
    const char* color = colors[s % 8];
    const std::string label = res.strategy + (res.control_kind == "lambda" ? " (lambda)" : "");
    out << "<g class=\"series\" data-name=\"" << detail::xml_escape(label) << "\">\n<polyline fill=\"none\" stroke=\""
        << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& p : res.points) out << X(p.mean_cost) << ',' << Y(p.accuracy) << ' ';
    out << "\"/>\n";
    for (const auto& p : res.points) {
      out << "<circle cx=\"" << X(p.mean_cost) << "\" cy=\"" << Y(p.accuracy) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    const double ly = t + 18.0 * static_cast<double>(s);
    out << "<rect x=\"" << w - r + 10 << "\" y=\"" << ly << "\" width=\"12\" height=\"4\" fill=\"" << color << "\"/>\n";
    out << "<text x=\"" << w - r + 28 << "\" y=\"" << ly + 6 << "\" font-size=\"11\">" << detail::xml_escape(label) << "</text>\n</g>\n";
  }
  out << "</svg>\n";
}

// Writes `render` into `path` only if rendering succeeds, so a failed export
// never leaves a file behind.
template <class Render>
void export_file(const std::filesystem::path& path, Render&& render) {
  std::ostringstream buffer;
  render(buffer);
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) fail(ErrorCode::io_error, "cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io_error, "cannot write " + path.string());
  out << buffer.str();
  if (!out) fail(ErrorCode::io_error, "write failed for " + path.string());
}

inline void write_trajectory_log(std::ostream& out, const SweepPoint& p) {
  write_trajectory_header(out);
  for (const auto& s : p.log) write_trajectory_step(out, s);
}

}  // namespace costacq
