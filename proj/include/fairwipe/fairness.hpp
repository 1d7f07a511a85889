#pragma once

// Group fairness measures, correlation-based bias bounds and the
// training-free selectors that decide which features, edges or nodes to
// unlearn.

#include "fairwipe/graph.hpp"
#include "fairwipe/linear_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fairwipe {

namespace detail {

inline void require_both_groups(std::span<const int> s) {
  bool seen[2] = {false, false};
  for (int v : s) {
    if (v != 0 && v != 1) throw std::invalid_argument("sensitive attribute must be binary");
    seen[v] = true;
  }
  if (!seen[0] || !seen[1]) throw std::invalid_argument("both sensitive groups must be non-empty");
}

/// Uniform [0,1) value from (seed, id); stateless so scores do not depend
/// on evaluation order.
inline double hashed_uniform(std::uint64_t seed, std::uint64_t id) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (id + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Correlations

struct CorrelationVector {
  Vector rho;

  double norm() const { return rho.norm(); }
};

/// Pearson correlation of every column with s. Zero-variance columns get 0.
inline CorrelationVector pearson_correlations(const Matrix& columns, std::span<const int> s) {
  if (static_cast<Index>(s.size()) != columns.rows()) throw std::invalid_argument("s length does not match rows");
  detail::require_both_groups(s);
  const Index n = columns.rows();
  Vector sc(n);
  for (Index i = 0; i < n; ++i) sc[i] = s[static_cast<std::size_t>(i)];
  sc.array() -= sc.mean();
  const double s_norm = sc.norm();

  CorrelationVector out;
  out.rho = Vector::Zero(columns.cols());
  for (Index c = 0; c < columns.cols(); ++c) {
    const Vector centered = columns.col(c).array() - columns.col(c).mean();
    const double x_norm = centered.norm();
    const double scale = columns.col(c).cwiseAbs().maxCoeff();
    if (x_norm <= 1e-12 * scale * std::sqrt(static_cast<double>(n)) || x_norm == 0.0) continue;
    out.rho[c] = std::clamp(centered.dot(sc) / (x_norm * s_norm), -1.0, 1.0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Selection

enum class SelectionKind { feature, edge, node };

struct SelectionResult {
  SelectionKind kind{SelectionKind::feature};
  std::vector<Index> candidates;   // feature ids, node ids, or positions in the edge list
  std::vector<double> scores;      // aligned with candidates
  std::vector<Index> chosen;       // ids, descending score, ties to the lowest id
  std::vector<Edge> chosen_edges;  // edge selections only
  Index budget{0};
};

namespace detail {

/// Top-k of (id, score); candidates scored -inf are ineligible.
inline std::vector<Index> top_k(const std::vector<Index>& ids, const std::vector<double>& scores, Index k) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (scores[i] != -std::numeric_limits<double>::infinity()) order.push_back(i);
  }
  const auto take = std::min<std::size_t>(order.size(), static_cast<std::size_t>(std::max<Index>(k, 0)));
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return ids[a] < ids[b];
                    });
  std::vector<Index> chosen;
  chosen.reserve(take);
  for (std::size_t i = 0; i < take; ++i) chosen.push_back(ids[order[i]]);
  return chosen;
}

}  // namespace detail

/// The k features with the largest |ρ_f| against s.
inline SelectionResult select_features(const Matrix& x, std::span<const int> s, Index k) {
  if (k < 1 || k > x.cols()) throw std::invalid_argument("feature budget k must lie in [1, F]");
  const CorrelationVector corr = pearson_correlations(x, s);
  SelectionResult out;
  out.kind = SelectionKind::feature;
  out.budget = k;
  for (Index f = 0; f < x.cols(); ++f) {
    out.candidates.push_back(f);
    out.scores.push_back(std::abs(corr.rho[f]));
  }
  out.chosen = detail::top_k(out.candidates, out.scores, k);
  return out;
}

/// Fairness-agnostic baseline: k features uniformly at random.
inline SelectionResult select_features_random(Index num_features, Index k, std::uint64_t seed) {
  if (k < 1 || k > num_features) throw std::invalid_argument("feature budget k must lie in [1, F]");
  SelectionResult out;
  out.kind = SelectionKind::feature;
  out.budget = k;
  for (Index f = 0; f < num_features; ++f) {
    out.candidates.push_back(f);
    out.scores.push_back(detail::hashed_uniform(seed, static_cast<std::uint64_t>(f)));
  }
  out.chosen = detail::top_k(out.candidates, out.scores, k);
  return out;
}

/// Scoring rules for structural selection and their ablations.
enum class ScoreVariant { proposed, random, random_intra, random_inter, bias_term_only, degree_only };

inline ScoreVariant parse_score_variant(const std::string& name) {
  if (name == "proposed") return ScoreVariant::proposed;
  if (name == "random") return ScoreVariant::random;
  if (name == "random-intra") return ScoreVariant::random_intra;
  if (name == "random-inter") return ScoreVariant::random_inter;
  if (name == "bias-term-only") return ScoreVariant::bias_term_only;
  if (name == "degree-only") return ScoreVariant::degree_only;
  throw std::invalid_argument("unknown selector variant '" + name + "'");
}

inline std::string to_string(ScoreVariant v) {
  switch (v) {
    case ScoreVariant::proposed: return "proposed";
    case ScoreVariant::random: return "random";
    case ScoreVariant::random_intra: return "random-intra";
    case ScoreVariant::random_inter: return "random-inter";
    case ScoreVariant::bias_term_only: return "bias-term-only";
    case ScoreVariant::degree_only: return "degree-only";
  }
  return "unknown";
}

/// b_e(e_ij) = 𝟙{s_i = s_j} / min(d_i, d_j).
inline double edge_bias_score(const Edge& e, std::span<const int> s, const DegreeStats& degrees) {
  const auto u = static_cast<std::size_t>(e.u);
  const auto v = static_cast<std::size_t>(e.v);
  if (s[u] != s[v]) return 0.0;
  const Index dmin = std::min(degrees.degree[u], degrees.degree[v]);
  if (dmin < 1) throw std::invalid_argument("edge endpoint has zero degree");
  return 1.0 / static_cast<double>(dmin);
}

/// b_n(v) = d^ω / (1 + d^χ) · 1/d; isolated nodes score 0.
inline double node_bias_score(Index node, const DegreeStats& degrees) {
  const auto i = static_cast<std::size_t>(node);
  if (degrees.degree[i] == 0) return 0.0;
  return static_cast<double>(degrees.intra_degree[i]) / (1.0 + static_cast<double>(degrees.inter_degree[i])) /
         static_cast<double>(degrees.degree[i]);
}

using EdgeScorer = std::function<double(const Edge&, std::span<const int>, const DegreeStats&)>;
using NodeScorer = std::function<double(Index, const DegreeStats&)>;

/// Edge scorer for proposed | random | random-intra | random-inter. The
/// restricted random variants mark the excluded edge class ineligible.
inline EdgeScorer edge_scorer(ScoreVariant variant, std::uint64_t seed = 0) {
  const double ineligible = -std::numeric_limits<double>::infinity();
  auto key = [](const Edge& e) { return static_cast<std::uint64_t>(e.u) * 0x100000001b3ULL ^ static_cast<std::uint64_t>(e.v); };
  switch (variant) {
    case ScoreVariant::proposed:
      return edge_bias_score;
    case ScoreVariant::random:
      return [=](const Edge& e, std::span<const int>, const DegreeStats&) {
        return detail::hashed_uniform(seed, key(e));
      };
    case ScoreVariant::random_intra:
      return [=](const Edge& e, std::span<const int> s, const DegreeStats&) {
        return s[static_cast<std::size_t>(e.u)] == s[static_cast<std::size_t>(e.v)]
                   ? detail::hashed_uniform(seed, key(e))
                   : ineligible;
      };
    case ScoreVariant::random_inter:
      return [=](const Edge& e, std::span<const int> s, const DegreeStats&) {
        return s[static_cast<std::size_t>(e.u)] != s[static_cast<std::size_t>(e.v)]
                   ? detail::hashed_uniform(seed, key(e))
                   : ineligible;
      };
    default:
      throw std::invalid_argument("'" + to_string(variant) + "' is not an edge scoring variant");
  }
}

/// Node scorer for proposed | random | bias-term-only | degree-only.
inline NodeScorer node_scorer(ScoreVariant variant, std::uint64_t seed = 0) {
  switch (variant) {
    case ScoreVariant::proposed:
      return node_bias_score;
    case ScoreVariant::random:
      return [=](Index v, const DegreeStats&) { return detail::hashed_uniform(seed, static_cast<std::uint64_t>(v)); };
    case ScoreVariant::bias_term_only:
      return [](Index v, const DegreeStats& d) {
        const auto i = static_cast<std::size_t>(v);
        return static_cast<double>(d.intra_degree[i]) / (1.0 + static_cast<double>(d.inter_degree[i]));
      };
    case ScoreVariant::degree_only:
      return [](Index v, const DegreeStats& d) {
        const auto i = static_cast<std::size_t>(v);
        return d.degree[i] == 0 ? 0.0 : 1.0 / static_cast<double>(d.degree[i]);
      };
    default:
      throw std::invalid_argument("'" + to_string(variant) + "' is not a node scoring variant");
  }
}

inline SelectionResult select_edges(const GraphDataset& ds, Index k, const EdgeScorer& scorer = edge_bias_score) {
  if (k < 0) throw std::invalid_argument("edge budget must be non-negative");
  const DegreeStats degrees = degree_stats(ds);
  const std::vector<Edge> edges = edge_list(ds.adjacency());
  SelectionResult out;
  out.kind = SelectionKind::edge;
  out.budget = k;
  out.candidates.resize(edges.size());
  out.scores.resize(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    out.candidates[i] = static_cast<Index>(i);
    out.scores[i] = scorer(edges[i], ds.sensitive, degrees);
  }
  out.chosen = detail::top_k(out.candidates, out.scores, k);
  for (Index pos : out.chosen) out.chosen_edges.push_back(edges[static_cast<std::size_t>(pos)]);
  return out;
}

enum class NodeScope { train_only, all_nodes };

inline SelectionResult select_nodes(const GraphDataset& ds, Index k, NodeScope scope = NodeScope::train_only,
                                    const NodeScorer& scorer = node_bias_score) {
  const DegreeStats degrees = degree_stats(ds);
  SelectionResult out;
  out.kind = SelectionKind::node;
  out.budget = k;
  for (Index v = 0; v < ds.num_nodes(); ++v) {
    if (scope == NodeScope::train_only && !ds.train_mask[static_cast<std::size_t>(v)]) continue;
    out.candidates.push_back(v);
    out.scores.push_back(scorer(v, degrees));
  }
  if (k < 0 || k > static_cast<Index>(out.candidates.size())) {
    throw std::invalid_argument("node budget exceeds the selection scope");
  }
  out.chosen = detail::top_k(out.candidates, out.scores, k);
  return out;
}

// ---------------------------------------------------------------------------
// Metrics

struct GroupFairness {
  double delta_sp{0.0};
  double delta_eo{0.0};
};

/// Δ_SP = |P(ŷ=1|s=0) − P(ŷ=1|s=1)| and Δ_EO = the same gap restricted to
/// y = 1, both over the nodes in `mask`.
inline GroupFairness fairness_metrics(std::span<const int> predicted, std::span<const int> labels,
                                      std::span<const int> s, const Mask& mask) {
  double positive[2] = {0, 0};
  double total[2] = {0, 0};
  double true_positive[2] = {0, 0};
  double actual_positive[2] = {0, 0};
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const int g = s[i];
    total[g] += 1;
    positive[g] += predicted[i] == 1;
    if (labels[i] == 1) {
      actual_positive[g] += 1;
      true_positive[g] += predicted[i] == 1;
    }
  }
  if (total[0] == 0 || total[1] == 0) throw std::invalid_argument("evaluation set lacks a sensitive group");
  if (actual_positive[0] == 0 || actual_positive[1] == 0) {
    throw std::invalid_argument("evaluation set lacks positive labels in a sensitive group");
  }
  GroupFairness out;
  out.delta_sp = std::abs(positive[0] / total[0] - positive[1] / total[1]);
  out.delta_eo = std::abs(true_positive[0] / actual_positive[0] - true_positive[1] / actual_positive[1]);
  return out;
}

/// sqrt(Σ_c Σ_i (x_ic − x̄_c)² / (d (N − 1))), the pooled per-column sample std.
inline double pooled_std(const Matrix& x) {
  if (x.rows() < 2 || x.cols() < 1) throw std::invalid_argument("pooled std needs at least two rows");
  const Matrix centered = x.rowwise() - x.colwise().mean();
  return std::sqrt(centered.squaredNorm() / (static_cast<double>(x.cols()) * static_cast<double>(x.rows() - 1)));
}

struct RawParity {
  double raw_sp{0.0};
  double bound{0.0};
  double rho_norm{0.0};
  double sigma{0.0};
  double s_bar{0.0};
};

/// Δ_SP^raw = |mean score over S₀ − mean score over S₁| and its bound
///   c N^{3/2} s̄ σ ‖ρ‖ / (|S₀||S₁| λ),  s̄ = ‖(I − 11ᵀ/N) s‖,
/// with ρ computed on the same matrix that produces the scores.
inline RawParity raw_sp_and_bound(const Matrix& x, const Vector& w, std::span<const int> s, double lambda,
                                  const LossSpec& loss, std::optional<double> sigma = std::nullopt) {
  if (w.size() != x.cols()) throw std::invalid_argument("weight dimension does not match columns");
  detail::require_both_groups(s);
  const Index n = x.rows();
  const Vector scores = x * w;
  double sum[2] = {0, 0};
  double size[2] = {0, 0};
  for (Index i = 0; i < n; ++i) {
    const int g = s[static_cast<std::size_t>(i)];
    sum[g] += scores[i];
    size[g] += 1;
  }
  RawParity out;
  out.raw_sp = std::abs(sum[0] / size[0] - sum[1] / size[1]);
  out.rho_norm = pearson_correlations(x, s).norm();
  out.sigma = sigma.value_or(pooled_std(x));
  const double nd = static_cast<double>(n);
  const double p = size[1] / nd;
  out.s_bar = std::sqrt(nd * p * (1.0 - p));
  out.bound = loss.c * std::pow(nd, 1.5) * out.s_bar * out.sigma * out.rho_norm / (size[0] * size[1] * lambda);
  return out;
}

struct AlphaDiagnostics {
  double alpha1{0.0};
  double alpha2{0.0};
};

/// α₁ = |1 − |S₀^χ|/|S₀| − |S₁^χ|/|S₁||,
/// α₂ = |1 − 2 min_g mean_{v∈S_g}(d^χ/(d^χ + d^ω))|, isolated nodes excluded.
inline AlphaDiagnostics alpha_diagnostics(const GraphDataset& ds) {
  const DegreeStats st = degree_stats(ds);
  if (st.group_size[0] == 0 || st.group_size[1] == 0) throw std::invalid_argument("both sensitive groups must be non-empty");
  double ratio_sum[2] = {0, 0};
  double counted[2] = {0, 0};
  for (std::size_t i = 0; i < st.degree.size(); ++i) {
    if (st.degree[i] == 0) continue;
    const int g = ds.sensitive[i];
    ratio_sum[g] += static_cast<double>(st.inter_degree[i]) / static_cast<double>(st.degree[i]);
    counted[g] += 1;
  }
  if (counted[0] == 0 || counted[1] == 0) {
    throw std::invalid_argument("a sensitive group has only isolated nodes; alpha2 is undefined");
  }
  AlphaDiagnostics out;
  out.alpha1 = std::abs(1.0 - static_cast<double>(st.boundary_size[0]) / static_cast<double>(st.group_size[0]) -
                        static_cast<double>(st.boundary_size[1]) / static_cast<double>(st.group_size[1]));
  out.alpha2 = std::abs(1.0 - 2.0 * std::min(ratio_sum[0] / counted[0], ratio_sum[1] / counted[1]));
  return out;
}

}  // namespace fairwipe
