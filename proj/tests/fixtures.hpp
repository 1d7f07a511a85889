#pragma once

// Small hand-checkable graphs and random instances shared by the suites.

#include "fairwipe/fairwipe.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace fixtures {

using namespace fairwipe;

inline GraphDataset graph(Index n, const std::vector<Edge>& edges, std::vector<int> s = {}, Index f = 1) {
  GraphDataset ds;
  ds.set_adjacency(adjacency_from_edges(n, edges));
  ds.features = Matrix::Zero(n, f);
  ds.sensitive = s.empty() ? std::vector<int>(static_cast<std::size_t>(n), 0) : std::move(s);
  ds.labels.assign(static_cast<std::size_t>(n), 0);
  ds.train_mask = full_mask(n, true);
  ds.val_mask = full_mask(n, false);
  ds.test_mask = full_mask(n, false);
  return ds;
}

inline GraphDataset triangle() { return graph(3, {{0, 1}, {1, 2}, {0, 2}}); }
inline GraphDataset path3() { return graph(3, {{0, 1}, {1, 2}}); }
inline GraphDataset star3() { return graph(3, {{0, 1}, {0, 2}}); }

/// Random graph with Gaussian features scaled so that max row norm is 1.
inline GraphDataset random_graph(std::uint64_t seed, Index n, Index f, double p_edge) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::bernoulli_distribution coin(p_edge);
  std::bernoulli_distribution group(0.4);
  std::vector<Edge> edges;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (coin(rng)) edges.push_back({i, j});
    }
  }
  std::vector<int> s(static_cast<std::size_t>(n));
  for (auto& v : s) v = group(rng) ? 1 : 0;
  s[0] = 0;
  s[1] = 1;
  GraphDataset ds = graph(n, edges, s, f);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < f; ++j) ds.features(i, j) = normal(rng);
  }
  ds.features /= ds.features.rowwise().norm().maxCoeff();
  for (auto& y : ds.labels) y = coin(rng) ? 1 : 0;
  return ds;
}

/// The synthetic suite of the acceptance criteria: N nodes, F features,
/// 60/20/20 split.
inline GraphDataset synthetic_instance(std::uint64_t seed, Index n = 200, Index f = 10) {
  SyntheticGraphSpec spec;
  spec.nodes = n;
  spec.features = f;
  spec.seed = seed;
  spec.biased_features = 2;
  spec.label_sensitive_weight = 0.5;
  return make_splits(make_synthetic_graph(spec), {}, seed);
}

}  // namespace fixtures
