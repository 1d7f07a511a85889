#pragma once

// Dataset ingestion (edge list + delimited feature table described by a
// manifest), feature normalization and seeded train/val/test splits.

#include "fairwipe/error.hpp"
#include "fairwipe/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fairwipe {

// ---------------------------------------------------------------------------
// key = value text files (manifests and experiment configs)

namespace text {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

/// Splits on commas, tabs or runs of spaces.
inline std::vector<std::string> split_fields(std::string_view line, char delimiter) {
  if (delimiter != ' ') return split(line, delimiter);
  std::vector<std::string> parts;
  std::istringstream in{std::string(line)};
  std::string tok;
  while (in >> tok) parts.push_back(tok);
  return parts;
}

inline std::optional<double> to_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

inline std::string unquote(std::string s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\''))) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

}  // namespace text

using KeyValues = std::map<std::string, std::string>;

inline KeyValues parse_key_values(std::istream& in, const std::string& origin = "<input>") {
  KeyValues kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = text::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = text::trim(std::string_view(body).substr(0, eq));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
    kv[key] = text::trim(std::string_view(body).substr(eq + 1));
  }
  return kv;
}

inline KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  return parse_key_values(in, path.string());
}

// ---------------------------------------------------------------------------
// Manifest

struct ExpectedStats {
  std::optional<Index> nodes, edges, features, group0, group1, inter_edges, intra_edges;
};

struct DatasetManifest {
  std::string name;
  std::filesystem::path edges_path;
  std::filesystem::path features_path;
  std::string sensitive_column;
  std::string label_column;
  std::optional<std::string> sensitive_positive;  // raw value mapped to 1
  std::optional<std::string> label_positive;
  std::vector<std::string> drop_columns;
  char delimiter{0};  // 0 = detect from the header
  ExpectedStats expected;
};

inline DatasetManifest parse_manifest(const KeyValues& kv, const std::filesystem::path& base_dir) {
  auto require = [&](const std::string& key) -> std::string {
    const auto it = kv.find(key);
    if (it == kv.end() || it->second.empty()) throw ConfigError("manifest is missing '" + key + "'");
    return it->second;
  };
  auto optional = [&](const std::string& key) -> std::optional<std::string> {
    const auto it = kv.find(key);
    if (it == kv.end() || it->second.empty()) return std::nullopt;
    return it->second;
  };
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  auto count_of = [&](const std::string& key) -> std::optional<Index> {
    const auto raw = optional("expected." + key);
    if (!raw) return std::nullopt;
    const auto v = text::to_number(*raw);
    if (!v || *v < 0 || std::floor(*v) != *v) throw ConfigError("expected." + key + " must be a count");
    return static_cast<Index>(*v);
  };

  DatasetManifest m;
  m.name = optional("name").value_or("dataset");
  m.edges_path = resolve(require("edges"));
  m.features_path = resolve(require("features"));
  m.sensitive_column = require("sensitive_column");
  m.label_column = require("label_column");
  m.sensitive_positive = optional("sensitive_positive");
  m.label_positive = optional("label_positive");
  if (const auto drop = optional("drop_columns")) {
    for (auto& c : text::split(*drop, ',')) {
      if (!c.empty()) m.drop_columns.push_back(c);
    }
  }
  if (const auto d = optional("delimiter")) {
    if (*d == "tab" || *d == "\\t") {
      m.delimiter = '\t';
    } else if (*d == "space" || *d == "whitespace") {
      m.delimiter = ' ';
    } else if (d->size() == 1) {
      m.delimiter = (*d)[0];
    } else {
      throw ConfigError("delimiter must be a single character, 'tab' or 'space'");
    }
  }
  m.expected.nodes = count_of("nodes");
  m.expected.edges = count_of("edges");
  m.expected.features = count_of("features");
  m.expected.group0 = count_of("s0");
  m.expected.group1 = count_of("s1");
  m.expected.inter_edges = count_of("inter_edges");
  m.expected.intra_edges = count_of("intra_edges");
  return m;
}

inline DatasetManifest read_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_key_values(path), path.parent_path());
}

// ---------------------------------------------------------------------------
// Loading

struct DatasetSummary {
  Index nodes{0}, edges{0}, features{0}, group0{0}, group1{0}, inter_edges{0}, intra_edges{0};
  Index boundary0{0}, boundary1{0};
};

inline DatasetSummary summarize(const GraphDataset& ds) {
  const DegreeStats st = degree_stats(ds);
  DatasetSummary s;
  s.nodes = ds.num_nodes();
  s.edges = ds.num_edges();
  s.features = ds.num_features();
  s.group0 = st.group_size[0];
  s.group1 = st.group_size[1];
  s.inter_edges = st.inter_edges;
  s.intra_edges = st.intra_edges;
  s.boundary0 = st.boundary_size[0];
  s.boundary1 = st.boundary_size[1];
  return s;
}

struct LoadedDataset {
  GraphDataset dataset;
  std::vector<std::string> feature_names;
  DatasetSummary summary;
  std::vector<std::string> warnings;
};

/// Standardizes columns (zero-variance columns become zero), then scales
/// all rows by the largest row norm so that max_i ‖x_i‖ = 1.
inline void normalize_features(Matrix& x) {
  if (x.rows() == 0) return;
  for (Index c = 0; c < x.cols(); ++c) {
    const double mean = x.col(c).mean();
    x.col(c).array() -= mean;
    const double sd = std::sqrt(x.col(c).squaredNorm() / static_cast<double>(x.rows()));
    if (sd > 1e-12 * std::max(1.0, std::abs(mean))) {
      x.col(c) /= sd;
    } else {
      x.col(c).setZero();
    }
  }
  const double max_norm = x.rowwise().norm().maxCoeff();
  if (max_norm > 0.0) x /= max_norm;
}

namespace detail {

inline std::vector<int> binarize(const std::vector<std::string>& raw, const std::optional<std::string>& positive,
                                 const std::string& column) {
  std::set<std::string> distinct(raw.begin(), raw.end());
  std::vector<int> out(raw.size());
  if (positive) {
    if (distinct.size() > 2) throw DataError("column '" + column + "' has more than two distinct values");
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = raw[i] == *positive ? 1 : 0;
    return out;
  }
  bool minus_one = false;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto v = text::to_number(raw[i]);
    if (!v || (*v != 0.0 && *v != 1.0 && *v != -1.0)) {
      throw DataError("column '" + column + "' has non-binary value '" + raw[i] + "'");
    }
    minus_one = minus_one || *v == -1.0;
    out[i] = *v == 1.0 ? 1 : 0;
  }
  if (minus_one) {
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (*text::to_number(raw[i]) == 0.0) throw DataError("column '" + column + "' mixes -1, 0 and 1");
    }
  }
  return out;
}

inline void check_expected(const ExpectedStats& e, const DatasetSummary& s) {
  std::string mismatch;
  auto check = [&](const std::optional<Index>& want, Index got, const char* what) {
    if (want && *want != got) {
      mismatch += std::string(" ") + what + ": expected " + std::to_string(*want) + ", loaded " + std::to_string(got) + ";";
    }
  };
  check(e.nodes, s.nodes, "nodes");
  check(e.edges, s.edges, "edges");
  check(e.features, s.features, "features");
  check(e.group0, s.group0, "s0");
  check(e.group1, s.group1, "s1");
  check(e.inter_edges, s.inter_edges, "inter_edges");
  check(e.intra_edges, s.intra_edges, "intra_edges");
  if (!mismatch.empty()) throw DataError("dataset statistics do not match the manifest:" + mismatch);
}

}  // namespace detail

/// Reads an edge list: two integer columns per line, '#' comments,
/// whitespace or comma separated. Indices are 0-based when the smallest
/// index is 0 and 1-based otherwise.
inline std::vector<Edge> read_edge_list(std::istream& in, Index num_nodes, std::vector<std::string>& warnings) {
  std::vector<std::pair<long long, long long>> raw;
  std::string line;
  int line_no = 0;
  long long min_index = std::numeric_limits<long long>::max();
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    std::string cleaned = body;
    std::replace(cleaned.begin(), cleaned.end(), ',', ' ');
    const auto fields = text::split_fields(cleaned, ' ');
    if (fields.size() != 2) throw DataError("edge list line " + std::to_string(line_no) + ": expected two columns");
    long long ends[2];
    for (int k = 0; k < 2; ++k) {
      const auto v = text::to_number(fields[static_cast<std::size_t>(k)]);
      if (!v || std::floor(*v) != *v || *v < 0) {
        throw DataError("edge list line " + std::to_string(line_no) + ": node ids must be non-negative integers");
      }
      ends[k] = static_cast<long long>(*v);
    }
    min_index = std::min({min_index, ends[0], ends[1]});
    raw.emplace_back(ends[0], ends[1]);
  }
  const long long offset = (raw.empty() || min_index == 0) ? 0 : 1;
  std::vector<Edge> edges;
  edges.reserve(raw.size());
  Index self_loops = 0;
  for (const auto& [a, b] : raw) {
    const long long u = a - offset;
    const long long v = b - offset;
    if (u >= num_nodes || v >= num_nodes) {
      throw DataError("edge (" + std::to_string(a) + ", " + std::to_string(b) + ") references a missing node");
    }
    if (u == v) {
      ++self_loops;
      continue;
    }
    edges.push_back(make_edge(static_cast<Index>(u), static_cast<Index>(v)));
  }
  std::sort(edges.begin(), edges.end());
  const auto unique_end = std::unique(edges.begin(), edges.end());
  const auto duplicates = static_cast<Index>(edges.end() - unique_end);
  edges.erase(unique_end, edges.end());
  if (self_loops > 0) warnings.push_back("dropped " + std::to_string(self_loops) + " self-loops");
  if (duplicates > 0) warnings.push_back("removed " + std::to_string(duplicates) + " duplicate edges");
  return edges;
}

inline LoadedDataset load_dataset(const DatasetManifest& manifest) {
  std::ifstream table(manifest.features_path);
  if (!table) throw DataError("cannot open feature table " + manifest.features_path.string());
  std::string header_line;
  if (!std::getline(table, header_line)) throw DataError("feature table is empty");
  char delim = manifest.delimiter;
  if (delim == 0) {
    delim = header_line.find(',') != std::string::npos ? ',' : (header_line.find('\t') != std::string::npos ? '\t' : ' ');
  }
  std::vector<std::string> header = text::split_fields(header_line, delim);
  for (auto& h : header) h = text::unquote(h);

  auto column_index = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("feature table has no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t s_col = column_index(manifest.sensitive_column);
  const std::size_t y_col = column_index(manifest.label_column);
  std::vector<bool> skip(header.size(), false);
  skip[s_col] = skip[y_col] = true;
  for (const auto& name : manifest.drop_columns) skip[column_index(name)] = true;

  LoadedDataset out;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (!skip[c]) {
      feature_cols.push_back(c);
      out.feature_names.push_back(header[c]);
    }
  }

  std::vector<std::string> s_raw, y_raw;
  std::vector<double> values;
  std::string line;
  int line_no = 1;
  while (std::getline(table, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    auto fields = text::split_fields(line, delim);
    if (fields.size() != header.size()) {
      throw DataError("feature table line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
    }
    for (auto& f : fields) f = text::unquote(f);
    s_raw.push_back(fields[s_col]);
    y_raw.push_back(fields[y_col]);
    for (std::size_t c : feature_cols) {
      const auto v = text::to_number(fields[c]);
      if (!v) {
        throw DataError("feature table line " + std::to_string(line_no) + ": column '" + header[c] +
                        "' is not numeric");
      }
      values.push_back(*v);
    }
  }
  const auto n = static_cast<Index>(s_raw.size());
  const auto f = static_cast<Index>(feature_cols.size());

  GraphDataset& ds = out.dataset;
  ds.features = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), n, f);
  normalize_features(ds.features);
  ds.sensitive = detail::binarize(s_raw, manifest.sensitive_positive, manifest.sensitive_column);
  ds.labels = detail::binarize(y_raw, manifest.label_positive, manifest.label_column);

  std::ifstream edge_file(manifest.edges_path);
  if (!edge_file) throw DataError("cannot open edge list " + manifest.edges_path.string());
  const std::vector<Edge> edges = read_edge_list(edge_file, n, out.warnings);
  ds.set_adjacency(adjacency_from_edges(n, edges));
  ds.train_mask = ds.val_mask = ds.test_mask = full_mask(n, false);

  out.summary = summarize(ds);
  detail::check_expected(manifest.expected, out.summary);
  return out;
}

// ---------------------------------------------------------------------------
// Splits

struct SplitFractions {
  double train{0.6};
  double val{0.2};
  double test{0.2};
};

namespace detail {

inline std::vector<Index> permutation(Index n, std::uint64_t seed) {
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

}  // namespace detail

/// Seeded uniform split. If the test set misses a sensitive group the split
/// is redrawn once with a derived seed before giving up.
inline GraphDataset make_splits(const GraphDataset& ds, const SplitFractions& fractions, std::uint64_t seed) {
  if (!(fractions.train > 0 && fractions.val >= 0 && fractions.test > 0)) {
    throw ConfigError("split fractions must be positive");
  }
  if (std::abs(fractions.train + fractions.val + fractions.test - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1");
  }
  const Index n = ds.num_nodes();
  const auto n_train = static_cast<Index>(std::llround(fractions.train * static_cast<double>(n)));
  const auto n_val = static_cast<Index>(std::llround(fractions.val * static_cast<double>(n)));
  if (n_train < 1 || n_train + n_val >= n) throw ConfigError("split leaves an empty training or test set");

  for (int attempt = 0; attempt < 2; ++attempt) {
    const std::uint64_t draw_seed = attempt == 0 ? seed : seed ^ 0x5bd1e9955bd1e995ULL;
    const std::vector<Index> order = detail::permutation(n, draw_seed);
    GraphDataset out = ds;
    out.train_mask = out.val_mask = out.test_mask = full_mask(n, false);
    bool test_group[2] = {false, false};
    for (Index r = 0; r < n; ++r) {
      const auto v = static_cast<std::size_t>(order[static_cast<std::size_t>(r)]);
      if (r < n_train) {
        out.train_mask[v] = true;
      } else if (r < n_train + n_val) {
        out.val_mask[v] = true;
      } else {
        out.test_mask[v] = true;
        test_group[ds.sensitive[v]] = true;
      }
    }
    if (test_group[0] && test_group[1]) return out;
  }
  throw DataError("test split lacks a sensitive group after resampling");
}

}  // namespace fairwipe
