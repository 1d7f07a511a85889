#pragma once

// End-to-end benchmark protocol: per seed, split, propagate, train with
// calibrated noise, select what to remove, unlearn with Newton steps and
// compare against retraining with the same perturbation.

#include "fairwipe/data.hpp"
#include "fairwipe/error.hpp"
#include "fairwipe/fairness.hpp"
#include "fairwipe/graph.hpp"
#include "fairwipe/linear_model.hpp"
#include "fairwipe/synthetic.hpp"
#include "fairwipe/unlearning.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fairwipe {

enum class Task { feature, edge, node };

inline std::string to_string(Task t) {
  switch (t) {
    case Task::feature: return "feature";
    case Task::edge: return "edge";
    case Task::node: return "node";
  }
  return "?";
}

inline Task parse_task(const std::string& name) {
  if (name == "feature") return Task::feature;
  if (name == "edge") return Task::edge;
  if (name == "node") return Task::node;
  throw ConfigError("unknown task '" + name + "' (feature|edge|node)");
}

struct Arms {
  bool pretrained{true};
  bool unlearn{true};
  bool retrain{true};
};

struct ExperimentConfig {
  std::string name;                          // dataset label in result rows
  std::optional<std::filesystem::path> manifest;
  std::optional<SyntheticGraphSpec> synthetic;
  Task task{Task::feature};
  Index k{5};
  double edge_fraction{0.10};
  int edge_batches{10};
  std::string selector{"proposed"};          // proposed | random | ablation variant
  NodeScope node_scope{NodeScope::train_only};
  AggregationSpec aggregation{};
  double lambda{10.0};
  double epsilon{1.0};
  double delta{1e-4};
  std::optional<double> epsilon_prime;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  SplitFractions splits{};
  Arms arms{};
  double tolerance{1e-8};
  int max_iterations{500};
  bool record_timing{true};
  int threads{1};
  std::string tag;
};

namespace detail {

inline double parse_double(const std::string& key, const std::string& value) {
  const auto v = text::to_number(value);
  if (!v) throw ConfigError("'" + key + "' expects a number, got '" + value + "'");
  return *v;
}

inline long long parse_integer(const std::string& key, const std::string& value) {
  const double v = parse_double(key, value);
  if (std::floor(v) != v) throw ConfigError("'" + key + "' expects an integer, got '" + value + "'");
  return static_cast<long long>(v);
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("'" + key + "' expects true or false, got '" + value + "'");
}

/// "0-9" or "1,4,7" or a mix of both.
inline std::vector<std::uint64_t> parse_seeds(const std::string& value) {
  std::vector<std::uint64_t> seeds;
  for (const auto& part : text::split(value, ',')) {
    if (part.empty()) continue;
    const auto dash = part.find('-', 1);
    if (dash == std::string::npos) {
      seeds.push_back(static_cast<std::uint64_t>(parse_integer("seeds", part)));
      continue;
    }
    const auto lo = parse_integer("seeds", text::trim(part.substr(0, dash)));
    const auto hi = parse_integer("seeds", text::trim(part.substr(dash + 1)));
    if (lo < 0 || hi < lo) throw ConfigError("bad seed range '" + part + "'");
    for (auto s = lo; s <= hi; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
  }
  return seeds;
}

}  // namespace detail

/// Applies one `key = value` setting. Used by the config reader and by sweeps.
inline void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& value,
                          const std::filesystem::path& base_dir = {}) {
  using namespace detail;
  if (key == "name") {
    c.name = value;
  } else if (key == "manifest") {
    std::filesystem::path p(value);
    c.manifest = p.is_absolute() ? p : base_dir / p;
  } else if (key == "source") {
    if (value == "synthetic") {
      if (!c.synthetic) c.synthetic = SyntheticGraphSpec{};
    } else if (value != "manifest") {
      throw ConfigError("source must be 'manifest' or 'synthetic'");
    }
  } else if (key.rfind("synthetic.", 0) == 0) {
    if (!c.synthetic) c.synthetic = SyntheticGraphSpec{};
    auto& s = *c.synthetic;
    const std::string field = key.substr(10);
    if (field == "nodes") s.nodes = parse_integer(key, value);
    else if (field == "features") s.features = parse_integer(key, value);
    else if (field == "average_degree") s.average_degree = parse_double(key, value);
    else if (field == "homophily") s.homophily = parse_double(key, value);
    else if (field == "group1_fraction") s.group1_fraction = parse_double(key, value);
    else if (field == "biased_features") s.biased_features = parse_integer(key, value);
    else if (field == "bias_strength") s.bias_strength = parse_double(key, value);
    else if (field == "label_sensitive_weight") s.label_sensitive_weight = parse_double(key, value);
    else if (field == "label_noise") s.label_noise = parse_double(key, value);
    else if (field == "seed") s.seed = static_cast<std::uint64_t>(parse_integer(key, value));
    else throw ConfigError("unknown setting '" + key + "'");
  } else if (key == "task") {
    c.task = parse_task(value);
  } else if (key == "k") {
    c.k = parse_integer(key, value);
  } else if (key == "edge_fraction") {
    c.edge_fraction = parse_double(key, value);
  } else if (key == "edge_batches") {
    c.edge_batches = static_cast<int>(parse_integer(key, value));
  } else if (key == "selector") {
    if (value != "proposed") parse_score_variant(value);  // validates the name
    c.selector = value;
  } else if (key == "node_scope") {
    if (value == "train") c.node_scope = NodeScope::train_only;
    else if (value == "all") c.node_scope = NodeScope::all_nodes;
    else throw ConfigError("node_scope must be 'train' or 'all'");
  } else if (key == "scheme") {
    if (value == "sgc") c.aggregation.scheme = Scheme::sgc;
    else if (value == "gpr") c.aggregation.scheme = Scheme::gpr;
    else throw ConfigError("scheme must be 'sgc' or 'gpr'");
  } else if (key == "hops") {
    c.aggregation.hops = static_cast<int>(parse_integer(key, value));
  } else if (key == "lambda") {
    c.lambda = parse_double(key, value);
  } else if (key == "epsilon") {
    c.epsilon = value == "inf" ? std::numeric_limits<double>::infinity() : parse_double(key, value);
  } else if (key == "delta") {
    c.delta = parse_double(key, value);
  } else if (key == "epsilon_prime") {
    c.epsilon_prime = parse_double(key, value);
  } else if (key == "seeds") {
    c.seeds = parse_seeds(value);
  } else if (key == "splits") {
    const auto parts = text::split(value, ',');
    if (parts.size() != 3) throw ConfigError("splits expects three fractions 'train,val,test'");
    c.splits = {parse_double(key, parts[0]), parse_double(key, parts[1]), parse_double(key, parts[2])};
  } else if (key == "arms") {
    c.arms = {false, false, false};
    for (const auto& a : text::split(value, ',')) {
      if (a == "pretrained") c.arms.pretrained = true;
      else if (a == "unlearn") c.arms.unlearn = true;
      else if (a == "retrain") c.arms.retrain = true;
      else throw ConfigError("unknown arm '" + a + "'");
    }
  } else if (key == "tolerance") {
    c.tolerance = parse_double(key, value);
  } else if (key == "max_iterations") {
    c.max_iterations = static_cast<int>(parse_integer(key, value));
  } else if (key == "record_timing") {
    c.record_timing = parse_bool(key, value);
  } else if (key == "threads") {
    c.threads = static_cast<int>(parse_integer(key, value));
  } else if (key == "tag") {
    c.tag = value;
  } else {
    throw ConfigError("unknown setting '" + key + "'");
  }
}

inline void validate_config(const ExperimentConfig& c) {
  if (!c.manifest && !c.synthetic) throw ConfigError("config needs a 'manifest' or 'source = synthetic'");
  if (c.seeds.empty()) throw ConfigError("seeds must be non-empty");
  const auto& f = c.splits;
  if (!(f.train > 0 && f.val >= 0 && f.test > 0) || std::abs(f.train + f.val + f.test - 1.0) > 1e-9) {
    throw ConfigError("split fractions must be positive and sum to 1");
  }
  if (!(c.lambda > 0)) throw ConfigError("lambda must be positive");
  if (!(c.epsilon > 0)) throw ConfigError("epsilon must be positive");
  if (!(c.delta > 0 && c.delta < 1.5)) throw ConfigError("delta must lie in (0, 1.5)");
  if (c.epsilon_prime && !(*c.epsilon_prime > 0)) throw ConfigError("epsilon_prime must be positive");
  if (c.aggregation.hops < 0) throw ConfigError("hops must be non-negative");
  if (c.task != Task::edge && c.k < 1) throw ConfigError("k must be at least 1");
  if (c.task == Task::edge && !(c.edge_fraction > 0 && c.edge_fraction <= 1)) {
    throw ConfigError("edge_fraction must lie in (0, 1]");
  }
  if (c.edge_batches < 1) throw ConfigError("edge_batches must be at least 1");
  if (!(c.arms.pretrained || c.arms.unlearn || c.arms.retrain)) throw ConfigError("no arms selected");
  if (c.threads < 1) throw ConfigError("threads must be at least 1");
  if (c.tolerance <= 0 || c.max_iterations < 1) throw ConfigError("optimizer settings must be positive");
  if (c.task == Task::feature && c.selector != "proposed" && c.selector != "random") {
    throw ConfigError("feature selection supports only 'proposed' and 'random'");
  }
  try {
    if (c.task == Task::edge && c.selector != "proposed") edge_scorer(parse_score_variant(c.selector));
    if (c.task == Task::node && c.selector != "proposed") node_scorer(parse_score_variant(c.selector));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

inline ExperimentConfig parse_config(const KeyValues& kv, const std::filesystem::path& base_dir = {}) {
  ExperimentConfig c;
  // source first so synthetic.* keys and manifest resolve in any order
  for (const auto& [key, value] : kv) {
    try {
      apply_setting(c, key, value, base_dir);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (c.name.empty()) c.name = c.manifest ? c.manifest->stem().string() : "synthetic";
  validate_config(c);
  return c;
}

inline ExperimentConfig read_config(const std::filesystem::path& path) {
  return parse_config(read_key_values(path), path.parent_path());
}

// ---------------------------------------------------------------------------
// Result rows

struct ResultRow {
  std::string dataset;
  std::string task;
  std::string selector;
  std::string arm;
  std::optional<std::uint64_t> seed;  // empty on aggregate rows
  Index k{0};
  double accuracy{0};
  double delta_sp{0};
  double delta_eo{0};
  double raw_sp{0};
  double rho_norm{0};
  double alpha1{0};
  double alpha2{0};
  double residual_norm{0};
  std::optional<double> worstcase_bound;
  std::optional<bool> certified;
  double wall_time{0};
  // trailing columns
  std::string stat{"value"};  // value | mean | std
  double val_accuracy{0};
  double rho_norm_z{0};
  std::string tag;

  bool operator==(const ResultRow&) const = default;
};

inline const std::vector<std::string>& result_columns() {
  static const std::vector<std::string> cols = {
      "dataset",  "task",   "selector", "arm",           "seed",            "k",
      "accuracy", "delta_sp", "delta_eo", "raw_sp",      "rho_norm",        "alpha1",
      "alpha2",   "residual_norm", "worstcase_bound", "certified", "wall_time", "stat",
      "val_accuracy", "rho_norm_z", "tag"};
  return cols;
}

namespace detail {

inline std::string fixed4(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  std::string s = buf;
  if (s == "-0.0000") s = "0.0000";
  return s;
}

inline std::string sci4(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4e", v);
  return buf;
}

/// Applies the output precision so that written and re-read rows compare equal.
inline double round_fixed(double v) { return std::stod(fixed4(v)); }
inline double round_sci(double v) { return std::stod(sci4(v)); }

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace detail

/// Rounds every float to its emitted precision: 4 decimals, or 4 decimals
/// of mantissa for raw_sp, residual_norm and worstcase_bound.
inline ResultRow rounded(ResultRow r) {
  using detail::round_fixed;
  using detail::round_sci;
  for (double* v : {&r.accuracy, &r.delta_sp, &r.delta_eo, &r.rho_norm, &r.alpha1, &r.alpha2,
                    &r.wall_time, &r.val_accuracy, &r.rho_norm_z}) {
    *v = round_fixed(*v);
  }
  r.raw_sp = round_sci(r.raw_sp);
  r.residual_norm = round_sci(r.residual_norm);
  if (r.worstcase_bound) r.worstcase_bound = round_sci(*r.worstcase_bound);
  return r;
}

inline void write_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  using namespace detail;
  const auto& cols = result_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const ResultRow& r : rows) {
    out << csv_field(r.dataset) << ',' << csv_field(r.task) << ',' << csv_field(r.selector) << ','
        << csv_field(r.arm) << ',' << (r.seed ? std::to_string(*r.seed) : "") << ',' << r.k << ','
        << fixed4(r.accuracy) << ',' << fixed4(r.delta_sp) << ',' << fixed4(r.delta_eo) << ',' << sci4(r.raw_sp)
        << ',' << fixed4(r.rho_norm) << ',' << fixed4(r.alpha1) << ',' << fixed4(r.alpha2) << ','
        << sci4(r.residual_norm) << ',' << (r.worstcase_bound ? sci4(*r.worstcase_bound) : "") << ','
        << (r.certified ? (*r.certified ? "true" : "false") : "") << ',' << fixed4(r.wall_time) << ','
        << r.stat << ',' << fixed4(r.val_accuracy) << ',' << fixed4(r.rho_norm_z) << ',' << csv_field(r.tag)
        << '\n';
  }
}

inline nlohmann::ordered_json to_json(const ResultRow& raw) {
  const ResultRow r = rounded(raw);
  nlohmann::ordered_json j;
  j["dataset"] = r.dataset;
  j["task"] = r.task;
  j["selector"] = r.selector;
  j["arm"] = r.arm;
  j["seed"] = r.seed ? nlohmann::ordered_json(*r.seed) : nlohmann::ordered_json(nullptr);
  j["k"] = r.k;
  j["accuracy"] = r.accuracy;
  j["delta_sp"] = r.delta_sp;
  j["delta_eo"] = r.delta_eo;
  j["raw_sp"] = r.raw_sp;
  j["rho_norm"] = r.rho_norm;
  j["alpha1"] = r.alpha1;
  j["alpha2"] = r.alpha2;
  j["residual_norm"] = r.residual_norm;
  j["worstcase_bound"] = r.worstcase_bound ? nlohmann::ordered_json(*r.worstcase_bound) : nlohmann::ordered_json(nullptr);
  j["certified"] = r.certified ? nlohmann::ordered_json(*r.certified) : nlohmann::ordered_json(nullptr);
  j["wall_time"] = r.wall_time;
  j["stat"] = r.stat;
  j["val_accuracy"] = r.val_accuracy;
  j["rho_norm_z"] = r.rho_norm_z;
  j["tag"] = r.tag;
  return j;
}

inline ResultRow from_json(const nlohmann::json& j) {
  ResultRow r;
  r.dataset = j.at("dataset").get<std::string>();
  r.task = j.at("task").get<std::string>();
  r.selector = j.at("selector").get<std::string>();
  r.arm = j.at("arm").get<std::string>();
  if (!j.at("seed").is_null()) r.seed = j.at("seed").get<std::uint64_t>();
  r.k = j.at("k").get<Index>();
  r.accuracy = j.at("accuracy").get<double>();
  r.delta_sp = j.at("delta_sp").get<double>();
  r.delta_eo = j.at("delta_eo").get<double>();
  r.raw_sp = j.at("raw_sp").get<double>();
  r.rho_norm = j.at("rho_norm").get<double>();
  r.alpha1 = j.at("alpha1").get<double>();
  r.alpha2 = j.at("alpha2").get<double>();
  r.residual_norm = j.at("residual_norm").get<double>();
  if (!j.at("worstcase_bound").is_null()) r.worstcase_bound = j.at("worstcase_bound").get<double>();
  if (!j.at("certified").is_null()) r.certified = j.at("certified").get<bool>();
  r.wall_time = j.at("wall_time").get<double>();
  r.stat = j.at("stat").get<std::string>();
  r.val_accuracy = j.at("val_accuracy").get<double>();
  r.rho_norm_z = j.at("rho_norm_z").get<double>();
  r.tag = j.at("tag").get<std::string>();
  return r;
}

inline void write_json(std::ostream& out, const std::vector<ResultRow>& rows) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const ResultRow& r : rows) arr.push_back(to_json(r));
  out << arr.dump(2) << '\n';
}

inline std::vector<ResultRow> read_results_json(std::istream& in) {
  const nlohmann::json arr = nlohmann::json::parse(in);
  std::vector<ResultRow> rows;
  for (const auto& j : arr) rows.push_back(from_json(j));
  return rows;
}

enum class OutputFormat { csv, json };

inline OutputFormat parse_format(const std::string& name) {
  if (name == "csv") return OutputFormat::csv;
  if (name == "json") return OutputFormat::json;
  throw ConfigError("format must be csv or json");
}

inline void emit_results(std::ostream& out, const std::vector<ResultRow>& rows, OutputFormat format) {
  if (rows.empty()) throw std::invalid_argument("no result rows to emit");
  if (format == OutputFormat::csv) {
    write_csv(out, rows);
  } else {
    write_json(out, rows);
  }
}

inline void emit_results(const std::vector<ResultRow>& rows, OutputFormat format, const std::filesystem::path& path) {
  if (rows.empty()) throw std::invalid_argument("no result rows to emit");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  emit_results(out, rows, format);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

/// Mean and sample standard deviation (n − 1; zero for a single value).
inline std::pair<double, double> mean_and_std(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("mean of an empty sample");
  double mean = 0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() == 1) return {mean, 0.0};
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

/// One mean row and one std row per arm, in first-appearance arm order.
inline std::vector<ResultRow> aggregate_rows(const std::vector<ResultRow>& rows) {
  std::vector<std::string> arms;
  for (const auto& r : rows) {
    if (r.stat == "value" && std::find(arms.begin(), arms.end(), r.arm) == arms.end()) arms.push_back(r.arm);
  }
  std::vector<ResultRow> out;
  for (const auto& arm : arms) {
    std::vector<const ResultRow*> group;
    for (const auto& r : rows) {
      if (r.stat == "value" && r.arm == arm) group.push_back(&r);
    }
    ResultRow mean = *group.front();
    ResultRow sd = mean;
    mean.seed.reset();
    sd.seed.reset();
    mean.stat = "mean";
    sd.stat = "std";
    auto reduce = [&](auto member) {
      std::vector<double> v;
      for (const auto* r : group) v.push_back(r->*member);
      const auto [m, s] = mean_and_std(v);
      mean.*member = m;
      sd.*member = s;
    };
    for (auto member : {&ResultRow::accuracy, &ResultRow::delta_sp, &ResultRow::delta_eo, &ResultRow::raw_sp,
                        &ResultRow::rho_norm, &ResultRow::alpha1, &ResultRow::alpha2, &ResultRow::residual_norm,
                        &ResultRow::wall_time, &ResultRow::val_accuracy, &ResultRow::rho_norm_z}) {
      reduce(member);
    }
    if (mean.worstcase_bound) {
      std::vector<double> v;
      for (const auto* r : group) v.push_back(r->worstcase_bound.value_or(0.0));
      const auto [m, s] = mean_and_std(v);
      mean.worstcase_bound = m;
      sd.worstcase_bound = s;
    }
    if (mean.certified) {
      bool all = true;
      for (const auto* r : group) all = all && r->certified.value_or(false);
      mean.certified = all;
    }
    sd.certified.reset();
    out.push_back(std::move(mean));
    out.push_back(std::move(sd));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Protocol

struct ExperimentData {
  GraphDataset dataset;  // masks unset
  std::vector<std::string> warnings;
};

inline ExperimentData load_experiment_data(const ExperimentConfig& config) {
  ExperimentData out;
  if (config.manifest) {
    LoadedDataset loaded = load_dataset(read_manifest(*config.manifest));
    out.dataset = std::move(loaded.dataset);
    out.warnings = std::move(loaded.warnings);
  } else {
    out.dataset = make_synthetic_graph(*config.synthetic);
  }
  validate_structure(out.dataset);
  return out;
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// The removal requests of one seed, in execution order.
inline std::vector<RemovalRequest> plan_removal(const ExperimentConfig& c, const GraphDataset& ds,
                                                std::uint64_t seed) {
  const std::uint64_t selection_seed = seed * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL;
  std::vector<RemovalRequest> requests;
  switch (c.task) {
    case Task::feature: {
      if (c.k > ds.num_features()) throw ConfigError("k exceeds the number of features");
      const SelectionResult sel = c.selector == "random" ? select_features_random(ds.num_features(), c.k, selection_seed)
                                                         : select_features(ds.features, ds.sensitive, c.k);
      requests.emplace_back(FeatureRemoval{sel.chosen});
      break;
    }
    case Task::edge: {
      const auto total = static_cast<Index>(std::llround(c.edge_fraction * static_cast<double>(ds.num_edges())));
      const EdgeScorer scorer =
          c.selector == "proposed" ? EdgeScorer(edge_bias_score) : edge_scorer(parse_score_variant(c.selector), selection_seed);
      const SelectionResult sel = select_edges(ds, total, scorer);
      const auto chosen = static_cast<Index>(sel.chosen_edges.size());
      for (int b = 0; b < c.edge_batches; ++b) {
        const Index lo = chosen * b / c.edge_batches;
        const Index hi = chosen * (b + 1) / c.edge_batches;
        requests.emplace_back(EdgeRemoval{{sel.chosen_edges.begin() + lo, sel.chosen_edges.begin() + hi}});
      }
      break;
    }
    case Task::node: {
      const NodeScorer scorer =
          c.selector == "proposed" ? NodeScorer(node_bias_score) : node_scorer(parse_score_variant(c.selector), selection_seed);
      const SelectionResult sel = select_nodes(ds, c.k, c.node_scope, scorer);
      requests.emplace_back(NodeRemoval{sel.chosen});
      break;
    }
  }
  return requests;
}

struct Evaluation {
  double accuracy, val_accuracy;
  GroupFairness fairness;
  RawParity parity;
  double rho_norm_x;
  AlphaDiagnostics alpha;
};

inline Evaluation evaluate(const GraphDataset& ds, const AggregatedFeatures& z, const Vector& w, double lambda) {
  const Prediction p = predict(w, z.values);
  Evaluation e{};
  e.accuracy = accuracy(p.labels, ds.labels, ds.test_mask);
  e.val_accuracy = count(ds.val_mask) > 0 ? accuracy(p.labels, ds.labels, ds.val_mask) : 0.0;
  e.fairness = fairness_metrics(p.labels, ds.labels, ds.sensitive, ds.test_mask);
  e.parity = raw_sp_and_bound(z.values, w, ds.sensitive, lambda, LossSpec::logistic());
  e.rho_norm_x = pearson_correlations(ds.features, ds.sensitive).norm();
  e.alpha = alpha_diagnostics(ds);
  return e;
}

}  // namespace detail

/// Rows of one seed: pretrained, unlearn and retrain as requested.
inline std::vector<ResultRow> run_seed(const ExperimentConfig& c, const GraphDataset& base, std::uint64_t seed) {
  using detail::Clock;
  const GraphDataset ds = make_splits(base, c.splits, seed);
  const AggregatedFeatures z = aggregate(ds, build_propagation(ds, c.aggregation.hops), c.aggregation.scheme);
  const Index m = count(ds.train_mask);

  TrainConfig tc;
  tc.lambda = c.lambda;
  tc.tolerance = c.tolerance;
  tc.max_iterations = c.max_iterations;
  tc.seed = seed;

  const std::vector<RemovalRequest> requests =
      (c.arms.unlearn || c.arms.retrain) ? detail::plan_removal(c, ds, seed) : std::vector<RemovalRequest>{};

  Index edges_removed = 0;
  for (const auto& q : requests) edges_removed += static_cast<Index>(request_size(q));

  CertificationBudget budget{c.epsilon, c.delta, 0.0, 0.0};
  std::optional<double> bound;
  if (c.task == Task::feature) bound = worstcase_bound_feature(ds.num_features(), c.k, m, LossSpec::logistic(), c.lambda);
  if (c.epsilon_prime) {
    budget.epsilon_prime = *c.epsilon_prime;
  } else if (bound) {
    budget.epsilon_prime = *bound;
  } else if (!requests.empty()) {
    // Structural removals have no closed-form bound: calibrate on a
    // noise-free dry run, with headroom for the noise-induced shift.
    constexpr double kDryRunHeadroom = 2.0;
    const TrainedModel dry = train(ds, z, tc, 0.0);
    const SequentialOutcome o = sequential_unlearn(dry, ds, z, c.aggregation, requests, budget);
    budget.epsilon_prime = std::max(kDryRunHeadroom * o.budget.accumulated_residual, 1e-12);
  } else {
    budget.epsilon_prime = 1e-3;
  }
  const double noise_std = calibrate_noise(budget);

  const auto train_start = Clock::now();
  const TrainedModel model = train(ds, z, tc, noise_std);
  const double train_seconds = detail::seconds_since(train_start);

  auto make_row = [&](const std::string& arm, const GraphDataset& d, const AggregatedFeatures& zz, const Vector& w) {
    const detail::Evaluation e = detail::evaluate(d, zz, w, c.lambda);
    ResultRow r;
    r.dataset = c.name;
    r.task = to_string(c.task);
    r.selector = c.selector;
    r.arm = arm;
    r.seed = seed;
    r.k = c.task == Task::edge ? edges_removed : c.k;
    r.accuracy = e.accuracy;
    r.val_accuracy = e.val_accuracy;
    r.delta_sp = e.fairness.delta_sp;
    r.delta_eo = e.fairness.delta_eo;
    r.raw_sp = e.parity.raw_sp;
    r.rho_norm = e.rho_norm_x;
    r.rho_norm_z = e.parity.rho_norm;
    r.alpha1 = e.alpha.alpha1;
    r.alpha2 = e.alpha.alpha2;
    r.tag = c.tag;
    return r;
  };

  std::vector<ResultRow> rows;
  if (c.arms.pretrained) {
    ResultRow r = make_row("pretrained", ds, z, model.weights);
    r.residual_norm = model.optimizer_residual;
    r.wall_time = c.record_timing ? train_seconds : 0.0;
    rows.push_back(std::move(r));
  }
  if (requests.empty()) return rows;

  // selection is repeated inside the timed region so that the unlearning
  // wall time covers selection + Newton updates
  const auto unlearn_start = Clock::now();
  const std::vector<RemovalRequest> timed_requests = detail::plan_removal(c, ds, seed);
  const SequentialOutcome outcome = sequential_unlearn(model, ds, z, c.aggregation, timed_requests, budget);
  const double unlearn_seconds = detail::seconds_since(unlearn_start);

  if (c.arms.unlearn) {
    ResultRow r = make_row("unlearn", outcome.dataset, outcome.aggregated, outcome.weights);
    r.residual_norm = outcome.budget.accumulated_residual;
    r.worstcase_bound = bound;
    r.certified = outcome.budget.certified();
    r.wall_time = c.record_timing ? unlearn_seconds : 0.0;
    rows.push_back(std::move(r));
  }
  if (c.arms.retrain) {
    // from scratch: the retrained model propagates the edited graph itself
    const auto retrain_start = Clock::now();
    const AggregatedFeatures z_retrain = aggregate(
        outcome.dataset, build_propagation(outcome.dataset, c.aggregation.hops), c.aggregation.scheme);
    const TrainedModel re = retrain_oracle(outcome.dataset, z_retrain, tc, model.perturbation);
    const double retrain_seconds = detail::seconds_since(retrain_start);
    ResultRow r = make_row("retrain", outcome.dataset, z_retrain, re.weights);
    r.residual_norm = re.optimizer_residual;
    r.wall_time = c.record_timing ? retrain_seconds : 0.0;
    rows.push_back(std::move(r));
  }
  return rows;
}

struct ExperimentReport {
  std::vector<ResultRow> rows;  // per-seed rows ordered by seed, then aggregates
  std::vector<std::string> failures;
  std::vector<std::string> warnings;
};

/// Runs every seed (in parallel when threads > 1) and reduces in seed order.
/// A seed that throws is recorded in `failures` and skipped.
inline ExperimentReport run_experiment(const ExperimentConfig& config) {
  validate_config(config);
  ExperimentData data = load_experiment_data(config);
  ExperimentReport report;
  report.warnings = data.warnings;

  const std::size_t n = config.seeds.size();
  std::vector<std::vector<ResultRow>> per_seed(n);
  std::vector<std::string> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        per_seed[i] = run_seed(config, data.dataset, config.seeds[i]);
      } catch (const ConfigError&) {
        throw;
      } catch (const std::exception& e) {
        errors[i] = "seed " + std::to_string(config.seeds[i]) + ": " + e.what();
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::max(1, config.threads));
  if (threads == 1 || n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr fatal;
    std::mutex fatal_mutex;
    for (std::size_t t = 0; t < std::min(threads, n); ++t) {
      pool.emplace_back([&] {
        try {
          worker();
        } catch (...) {
          std::lock_guard lock(fatal_mutex);
          if (!fatal) fatal = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    if (fatal) std::rethrow_exception(fatal);
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i].empty()) {
      report.failures.push_back(errors[i]);
      continue;
    }
    for (auto& r : per_seed[i]) report.rows.push_back(std::move(r));
  }
  if (report.rows.empty()) return report;
  std::vector<ResultRow> aggregates = aggregate_rows(report.rows);
  for (auto& r : aggregates) report.rows.push_back(std::move(r));
  return report;
}

}  // namespace fairwipe
