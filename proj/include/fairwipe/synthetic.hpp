#pragma once

// Seeded synthetic attributed graphs with a binary sensitive attribute,
// homophilous wiring and optionally sensitive-correlated features.

#include "fairwipe/data.hpp"
#include "fairwipe/graph.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace fairwipe {

struct SyntheticGraphSpec {
  Index nodes{200};
  Index features{10};
  double average_degree{6.0};
  double homophily{0.8};         // probability that a generated edge is intra-group
  double group1_fraction{0.35};
  Index biased_features{0};      // leading columns shifted by ±bias_strength with s
  double bias_strength{1.0};
  double label_sensitive_weight{0.0};  // direct dependence of y on s
  double label_noise{0.5};
  std::uint64_t seed{0};
};

/// Gaussian features normalized so that max_i ‖x_i‖ = 1, labels from a
/// noisy linear rule, and edges drawn group-aware at the requested
/// homophily. Masks are left empty; see make_splits.
inline GraphDataset make_synthetic_graph(const SyntheticGraphSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const Index n = spec.nodes;
  const Index f = spec.features;

  GraphDataset ds;
  ds.sensitive.resize(static_cast<std::size_t>(n));
  std::vector<Index> group[2];
  for (Index i = 0; i < n; ++i) {
    const int s = uniform(rng) < spec.group1_fraction ? 1 : 0;
    ds.sensitive[static_cast<std::size_t>(i)] = s;
    group[s].push_back(i);
  }
  // guarantee both groups exist
  if (group[0].empty() || group[1].empty()) {
    const int missing = group[0].empty() ? 0 : 1;
    ds.sensitive[0] = missing;
    group[missing].push_back(0);
    auto& other = group[1 - missing];
    other.erase(std::remove(other.begin(), other.end(), Index{0}), other.end());
  }

  ds.features.resize(n, f);
  for (Index i = 0; i < n; ++i) {
    const double sign = ds.sensitive[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
    for (Index j = 0; j < f; ++j) {
      ds.features(i, j) = normal(rng) + (j < spec.biased_features ? sign * spec.bias_strength : 0.0);
    }
  }
  const double max_norm = ds.features.rowwise().norm().maxCoeff();
  if (max_norm > 0.0) ds.features /= max_norm;

  Vector beta(f);
  for (Index j = 0; j < f; ++j) beta[j] = normal(rng);
  const double scale = std::sqrt(static_cast<double>(f)) / std::max(beta.norm(), 1e-12);
  ds.labels.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const double sign = ds.sensitive[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
    const double logit = scale * ds.features.row(i).dot(beta) * max_norm / std::sqrt(static_cast<double>(f)) +
                         spec.label_sensitive_weight * sign + spec.label_noise * normal(rng);
    ds.labels[static_cast<std::size_t>(i)] = logit > 0.0 ? 1 : 0;
  }

  std::vector<Edge> edges;
  const auto target = static_cast<Index>(std::llround(spec.average_degree * static_cast<double>(n) / 2.0));
  std::uniform_int_distribution<Index> pick_node(0, n - 1);
  for (Index e = 0; e < target; ++e) {
    const Index u = pick_node(rng);
    const int su = ds.sensitive[static_cast<std::size_t>(u)];
    const int sv = uniform(rng) < spec.homophily ? su : 1 - su;
    const auto& pool = group[sv];
    if (pool.empty()) continue;
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    const Index v = pool[pick(rng)];
    if (v != u) edges.push_back(make_edge(u, v));
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  ds.set_adjacency(adjacency_from_edges(n, edges));
  ds.train_mask = ds.val_mask = ds.test_mask = full_mask(n, false);
  return ds;
}

}  // namespace fairwipe
