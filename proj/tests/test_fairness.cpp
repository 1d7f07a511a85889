#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace fairwipe;
using fixtures::graph;

TEST(Pearson, IdentityAndNegation) {
  const std::vector<int> s{0, 1, 1, 0, 1, 0};
  Matrix x(6, 3);
  for (int i = 0; i < 6; ++i) x.row(i) << s[i], 1 - s[i], 3.0;
  const auto rho = pearson_correlations(x, s).rho;
  EXPECT_DOUBLE_EQ(rho[0], 1.0);
  EXPECT_DOUBLE_EQ(rho[1], -1.0);
  EXPECT_EQ(rho[2], 0.0);
}

TEST(Pearson, SingleGroupIsAnError) {
  EXPECT_THROW(pearson_correlations(Matrix::Ones(3, 1), std::vector<int>{1, 1, 1}), std::invalid_argument);
}

TEST(Pearson, MatchesDirectComputationAfterAggregation) {
  const auto ds = fixtures::random_graph(3, 40, 4, 0.15);
  const auto prop = build_propagation(ds, 1);
  const Vector a = Vector::LinSpaced(4, -1.0, 2.0);
  const Vector mixed = prop.matrix * (ds.features * a);
  const double via_api = pearson_correlations(Matrix(mixed), ds.sensitive).rho[0];
  Vector sv(40);
  for (int i = 0; i < 40; ++i) sv[i] = ds.sensitive[static_cast<std::size_t>(i)];
  const Vector xc = mixed.array() - mixed.mean();
  const Vector sc = sv.array() - sv.mean();
  EXPECT_NEAR(via_api, xc.dot(sc) / (xc.norm() * sc.norm()), 1e-14);
}

TEST(SelectFeatures, RanksByAbsoluteCorrelation) {
  // columns engineered to ρ ≈ (0.9, −0.95, 0.1)
  const std::vector<int> s{0, 0, 0, 0, 1, 1, 1, 1};
  Matrix x(8, 3);
  x << 0.1, 1.0, 0.3, 0.0, 1.1, -0.2, 0.2, 0.9, 0.5, 0.5, 1.0, 0.1, 1.0, 0.1, 0.4, 0.9, 0.0, -0.1, 0.6, 0.2, 0.3,
      1.1, -0.1, 0.0;
  const auto rho = pearson_correlations(x, s).rho;
  ASSERT_GT(std::abs(rho[1]), std::abs(rho[0]));
  ASSERT_LT(rho[1], 0.0);
  EXPECT_EQ(select_features(x, s, 1).chosen, (std::vector<Index>{1}));
}

TEST(SelectFeatures, FullBudgetReturnsEverything) {
  const auto ds = fixtures::random_graph(1, 30, 5, 0.1);
  auto chosen = select_features(ds.features, ds.sensitive, 5).chosen;
  std::sort(chosen.begin(), chosen.end());
  EXPECT_EQ(chosen, (std::vector<Index>{0, 1, 2, 3, 4}));
  EXPECT_THROW(select_features(ds.features, ds.sensitive, 6), std::invalid_argument);
  EXPECT_THROW(select_features(ds.features, ds.sensitive, 0), std::invalid_argument);
}

TEST(SelectFeatures, TiesBreakToLowestIndex) {
  const std::vector<int> s{0, 1, 0, 1};
  Matrix x(4, 3);
  x.col(0) << 1, 2, 3, 4;
  x.col(1) = x.col(0);
  x.col(2) = x.col(0);
  EXPECT_EQ(select_features(x, s, 2).chosen, (std::vector<Index>{0, 1}));
}

TEST(SelectFeatures, ChosenScoresDominate) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto ds = fixtures::random_graph(seed, 30, 8, 0.1);
    const auto sel = select_features(ds.features, ds.sensitive, 3);
    double worst_chosen = 1e9, best_other = -1e9;
    for (std::size_t i = 0; i < sel.candidates.size(); ++i) {
      const bool in = std::find(sel.chosen.begin(), sel.chosen.end(), sel.candidates[i]) != sel.chosen.end();
      (in ? worst_chosen : best_other) = in ? std::min(worst_chosen, sel.scores[i]) : std::max(best_other, sel.scores[i]);
    }
    EXPECT_GE(worst_chosen, best_other);
  }
}

TEST(SelectFeatures, RandomBaselineIsSeeded) {
  EXPECT_EQ(select_features_random(10, 3, 5).chosen, select_features_random(10, 3, 5).chosen);
  EXPECT_NE(select_features_random(10, 3, 5).chosen, select_features_random(10, 3, 6).chosen);
}

TEST(EdgeScore, HandComputedValues) {
  // node 0 has degree 3 and node 1 degree 5; both in group 0
  std::vector<Edge> edges{{0, 1}, {0, 2}, {0, 3}, {1, 4}, {1, 5}, {1, 6}, {1, 7}, {8, 9}};
  const auto ds = graph(10, edges, {0, 0, 0, 0, 0, 1, 0, 0, 0, 1});
  const auto st = degree_stats(ds);
  EXPECT_DOUBLE_EQ(edge_bias_score({0, 1}, ds.sensitive, st), 1.0 / 3.0);
  EXPECT_EQ(edge_bias_score({1, 5}, ds.sensitive, st), 0.0);
  EXPECT_EQ(edge_bias_score({8, 9}, ds.sensitive, st), 0.0);
  EXPECT_DOUBLE_EQ(edge_bias_score({0, 2}, ds.sensitive, st), 1.0);
  const auto sel = select_edges(ds, 1);
  EXPECT_EQ(sel.chosen_edges.front(), (Edge{0, 2}));
}

TEST(NodeScore, HandComputedValues) {
  // node 0: four intra neighbours, one inter neighbour
  const auto ds = graph(8, {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}, {6, 7}, {6, 1}}, {0, 0, 0, 0, 0, 1, 0, 1});
  const auto st = degree_stats(ds);
  EXPECT_DOUBLE_EQ(node_bias_score(0, st), 0.4);
  EXPECT_EQ(node_bias_score(7, st), 0.0);
  EXPECT_DOUBLE_EQ(node_bias_score(2, st), 1.0);
  EXPECT_DOUBLE_EQ(node_scorer(ScoreVariant::bias_term_only)(0, st), 2.0);
  EXPECT_DOUBLE_EQ(node_scorer(ScoreVariant::degree_only)(0, st), 0.2);
}

TEST(NodeScore, IsolatedNodesScoreZero) {
  const auto ds = graph(3, {{0, 1}}, {0, 0, 1});
  EXPECT_EQ(node_bias_score(2, degree_stats(ds)), 0.0);
}

TEST(SelectNodes, ScopeAndBudget) {
  auto ds = fixtures::random_graph(2, 30, 2, 0.2);
  ds.train_mask = full_mask(30, false);
  for (Index i = 0; i < 10; ++i) ds.train_mask[static_cast<std::size_t>(i)] = true;
  const auto sel = select_nodes(ds, 4, NodeScope::train_only);
  for (Index v : sel.chosen) EXPECT_LT(v, 10);
  EXPECT_THROW(select_nodes(ds, 11, NodeScope::train_only), std::invalid_argument);
  EXPECT_NO_THROW(select_nodes(ds, 11, NodeScope::all_nodes));
}

TEST(Ablations, RandomVariantsAreSeededAndRestricted) {
  const auto ds = fixtures::random_graph(4, 40, 2, 0.2);
  const auto intra = select_edges(ds, 10, edge_scorer(ScoreVariant::random_intra, 3));
  const auto inter = select_edges(ds, 10, edge_scorer(ScoreVariant::random_inter, 3));
  for (const Edge& e : intra.chosen_edges) EXPECT_EQ(ds.sensitive[e.u], ds.sensitive[e.v]);
  for (const Edge& e : inter.chosen_edges) EXPECT_NE(ds.sensitive[e.u], ds.sensitive[e.v]);
  EXPECT_EQ(intra.chosen, select_edges(ds, 10, edge_scorer(ScoreVariant::random_intra, 3)).chosen);
  const auto three = graph(3, {}, {0, 1, 0});
  const auto a = select_nodes(three, 3, NodeScope::all_nodes, node_scorer(ScoreVariant::random, 9)).chosen;
  EXPECT_EQ(a, select_nodes(three, 3, NodeScope::all_nodes, node_scorer(ScoreVariant::random, 9)).chosen);
  EXPECT_THROW(parse_score_variant("nope"), std::invalid_argument);
  EXPECT_THROW(edge_scorer(ScoreVariant::degree_only), std::invalid_argument);
}

TEST(FairnessMetrics, ConstantPredictionHasNoParityGap) {
  const std::vector<int> s{0, 0, 1, 1}, y{1, 0, 1, 0}, yhat{1, 1, 1, 1};
  const auto m = fairness_metrics(yhat, y, s, full_mask(4, true));
  EXPECT_EQ(m.delta_sp, 0.0);
  EXPECT_EQ(m.delta_eo, 0.0);
}

TEST(FairnessMetrics, PredictingTheSensitiveAttribute) {
  const std::vector<int> s{0, 0, 1, 1}, y{1, 0, 1, 0};
  EXPECT_EQ(fairness_metrics(s, y, s, full_mask(4, true)).delta_sp, 1.0);
}

TEST(FairnessMetrics, EightNodeHandCount) {
  const std::vector<int> s{0, 0, 0, 0, 1, 1, 1, 1};
  const std::vector<int> yhat{1, 1, 1, 0, 1, 0, 0, 0};
  const std::vector<int> y{1, 1, 0, 0, 1, 1, 0, 0};
  const auto m = fairness_metrics(yhat, y, s, full_mask(8, true));
  EXPECT_DOUBLE_EQ(m.delta_sp, 0.5);
  EXPECT_DOUBLE_EQ(m.delta_eo, 0.5);
}

TEST(FairnessMetrics, EmptyConditioningGroupIsAnError) {
  const std::vector<int> s{0, 0, 1, 1}, y{1, 0, 0, 0}, yhat{1, 1, 1, 1};
  EXPECT_THROW(fairness_metrics(yhat, y, s, full_mask(4, true)), std::invalid_argument);
  Mask only_group0{true, true, false, false};
  EXPECT_THROW(fairness_metrics(yhat, std::vector<int>{1, 0, 1, 0}, s, only_group0), std::invalid_argument);
}

TEST(FairnessMetrics, InvariantToMonotoneScoreTransforms) {
  const auto ds = fixtures::synthetic_instance(3);
  const Matrix x = ds.features;
  const Vector w = Vector::LinSpaced(x.cols(), -1, 1);
  const auto p = predict(w, x);
  std::vector<int> transformed(p.labels.size());
  for (std::size_t i = 0; i < transformed.size(); ++i) {
    transformed[i] = std::tanh(3.0 * p.scores[static_cast<Index>(i)]) + std::pow(p.scores[static_cast<Index>(i)], 3) > 0 ? 1 : 0;
  }
  const auto a = fairness_metrics(p.labels, ds.labels, ds.sensitive, ds.test_mask);
  const auto b = fairness_metrics(transformed, ds.labels, ds.sensitive, ds.test_mask);
  EXPECT_EQ(a.delta_sp, b.delta_sp);
  EXPECT_EQ(a.delta_eo, b.delta_eo);
}

TEST(RawParity, ZeroWeightsGiveZero) {
  const auto ds = fixtures::synthetic_instance(1);
  const auto r = raw_sp_and_bound(ds.features, Vector::Zero(ds.num_features()), ds.sensitive, 10.0,
                                  LossSpec::logistic());
  EXPECT_EQ(r.raw_sp, 0.0);
  EXPECT_GE(r.bound, 0.0);
}

TEST(RawParity, BalancedGroupsGiveHalfRootN) {
  std::vector<int> s(100);
  for (std::size_t i = 0; i < 100; ++i) s[i] = static_cast<int>(i % 2);
  const auto r = raw_sp_and_bound(Matrix::Random(100, 3), Vector::Ones(3), s, 10.0, LossSpec::logistic());
  EXPECT_NEAR(r.s_bar, std::sqrt(100.0) / 2.0, 1e-12);
}

TEST(RawParity, BoundShrinksAsTopColumnsAreZeroed) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SyntheticGraphSpec spec;
    spec.nodes = 150;
    spec.features = 8;
    spec.biased_features = 3;
    spec.seed = seed;
    const GraphDataset ds = make_synthetic_graph(spec);
    const auto order = select_features(ds.features, ds.sensitive, 8).chosen;
    Matrix x = ds.features;
    const Vector w = Vector::Constant(8, 0.05);
    double previous = raw_sp_and_bound(x, w, ds.sensitive, 10.0, LossSpec::logistic()).bound;
    for (Index f : order) {
      x.col(f).setZero();
      const double next = raw_sp_and_bound(x, w, ds.sensitive, 10.0, LossSpec::logistic()).bound;
      EXPECT_LE(next, previous + 1e-15);
      previous = next;
    }
  }
}

TEST(RawParity, ZeroingAColumnOnlyZeroesItsCorrelation) {
  const auto ds = fixtures::synthetic_instance(5);
  const auto before = pearson_correlations(ds.features, ds.sensitive).rho;
  Matrix x = ds.features;
  x.col(3).setZero();
  Vector after = pearson_correlations(x, ds.sensitive).rho;
  EXPECT_EQ(after[3], 0.0);
  after[3] = before[3];
  EXPECT_TRUE(after.isApprox(before, 0.0));
}

TEST(Alpha, FourNodeFixture) {
  const auto a = alpha_diagnostics(graph(4, {{0, 1}, {2, 3}, {0, 2}}, {0, 0, 1, 1}));
  EXPECT_EQ(a.alpha1, 0.0);
  // group means of d^χ/d: node 0 → 1/2, node 1 → 0 → 1/4 for both groups
  EXPECT_DOUBLE_EQ(a.alpha2, 0.5);
}

TEST(Alpha, AllInterEdges) {
  const auto a = alpha_diagnostics(graph(4, {{0, 2}, {0, 3}, {1, 2}, {1, 3}}, {0, 0, 1, 1}));
  EXPECT_EQ(a.alpha1, 1.0);
  EXPECT_EQ(a.alpha2, 1.0);
}

TEST(Alpha, NoInterEdges) {
  const auto a = alpha_diagnostics(graph(4, {{0, 1}, {2, 3}}, {0, 0, 1, 1}));
  EXPECT_EQ(a.alpha1, 1.0);
  EXPECT_EQ(a.alpha2, 1.0);
}

TEST(Alpha, IsolatedGroupIsAnError) {
  EXPECT_THROW(alpha_diagnostics(graph(4, {{0, 1}}, {0, 0, 1, 1})), std::invalid_argument);
}
