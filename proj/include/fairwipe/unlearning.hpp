#pragma once

// Certified unlearning by a single Newton step.
//
// Given weights w* trained on D and an edited dataset D̃, the update is
//
//   Δ = ∇L(w*; D) − ∇L(w*; D̃)          (data and regularizer terms, no b)
//   w̃ = w* + H⁻¹ Δ,   H = ∇²L(w*; D̃)
//
// and the certificate is the gradient residual ‖∇L_b(w̃; D̃)‖. When the
// residual stays below ε′ and training drew b ~ Normal(0, (c₀ε′/ε)² I), the
// update is (ε, δ)-indistinguishable from retraining with δ = 1.5 e^{−c₀²/2}.

#include "fairwipe/graph.hpp"
#include "fairwipe/linear_model.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

namespace fairwipe {

struct FeatureRemoval {
  std::vector<Index> features;
};
struct EdgeRemoval {
  std::vector<Edge> edges;
};
struct NodeRemoval {
  std::vector<Index> nodes;
};

using RemovalRequest = std::variant<FeatureRemoval, EdgeRemoval, NodeRemoval>;

inline std::size_t request_size(const RemovalRequest& request) {
  return std::visit(
      [](const auto& r) -> std::size_t {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, FeatureRemoval>) return r.features.size();
        if constexpr (std::is_same_v<T, EdgeRemoval>) return r.edges.size();
        if constexpr (std::is_same_v<T, NodeRemoval>) return r.nodes.size();
      },
      request);
}

/// The dataset D̃ produced by a removal request.
inline GraphDataset apply_request(const GraphDataset& ds, const RemovalRequest& request) {
  return std::visit(
      [&](const auto& r) -> GraphDataset {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, FeatureRemoval>) return remove_features(ds, r.features);
        if constexpr (std::is_same_v<T, EdgeRemoval>) return remove_edges(ds, r.edges);
        if constexpr (std::is_same_v<T, NodeRemoval>) return remove_nodes(ds, r.nodes);
      },
      request);
}

struct AggregationSpec {
  Scheme scheme{Scheme::gpr};
  int hops{3};
};

/// Z̃ for an edited dataset. Feature removals reuse Z with the matching
/// columns zeroed; structural removals rebuild P̃ and re-propagate.
inline AggregatedFeatures aggregate_after(const GraphDataset& edited, const AggregatedFeatures& before,
                                          const RemovalRequest& request, const AggregationSpec& spec) {
  if (const auto* fr = std::get_if<FeatureRemoval>(&request)) {
    return zero_feature_columns(before, fr->features);
  }
  return aggregate(edited, build_propagation(edited, spec.hops), spec.scheme);
}

// ---------------------------------------------------------------------------

struct UnlearnResult {
  Vector updated_weights;
  Vector delta;
  double residual_norm{0.0};
  std::optional<double> worstcase_bound;
  double wall_seconds{0.0};
  Index training_count{0};  // m′
};

/// One Newton step from `weights` (trained on Z / train_before) toward the
/// minimizer of the perturbed objective on Z̃ / train_after.
inline UnlearnResult newton_unlearn(const Vector& weights, const Vector& perturbation, double lambda,
                                    const AggregatedFeatures& z, const AggregatedFeatures& z_edited,
                                    std::span<const int> labels, const Mask& train_before,
                                    const Mask& train_after) {
  if (z.width() != z_edited.width()) throw std::invalid_argument("Z and Z̃ widths differ");
  if (weights.size() != z.width()) throw std::invalid_argument("weight dimension does not match Z width");
  const auto start = std::chrono::steady_clock::now();

  if (static_cast<Index>(labels.size()) != z.rows() || static_cast<Index>(train_before.size()) != z.rows() ||
      static_cast<Index>(train_after.size()) != z.rows()) {
    throw std::invalid_argument("labels and masks must have one entry per row of Z");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if ((train_before[i] || train_after[i]) && labels[i] != 0 && labels[i] != 1) {
      throw std::invalid_argument("labels must be in {0,1}");
    }
  }
  const auto m = static_cast<double>(count(train_before));
  const auto m_after = static_cast<double>(count(train_after));

  UnlearnResult result;
  result.delta = loss_gradient_sum(weights, z.values, labels, train_before) -
                 loss_gradient_sum(weights, z_edited.values, labels, train_after) +
                 (lambda * (m - m_after)) * weights;
  const Eigen::LLT<Matrix> llt(hessian(weights, z_edited.values, train_after, lambda));
  if (llt.info() != Eigen::Success) throw std::logic_error("Hessian factorization failed");
  result.updated_weights = weights + llt.solve(result.delta);
  Vector gradient = loss_gradient_sum(result.updated_weights, z_edited.values, labels, train_after) +
                    (lambda * m_after) * result.updated_weights;
  if (perturbation.size() != 0) gradient += perturbation;
  result.residual_norm = gradient.norm();
  result.training_count = static_cast<Index>(m_after);
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

inline UnlearnResult newton_unlearn(const TrainedModel& model, const AggregatedFeatures& z,
                                    const AggregatedFeatures& z_edited, std::span<const int> labels,
                                    const Mask& train_mask) {
  return newton_unlearn(model.weights, model.perturbation, model.lambda, z, z_edited, labels, train_mask,
                        train_mask);
}

/// Worst-case gradient residual for removing k of F features from all
/// nodes with m training rows (SGC and GPR alike):
///   γ₂/m · [(2c√F + c₁√((F−k)m)) / (λ√F)]²
inline double worstcase_bound_feature(Index num_features, Index removed, Index train_count,
                                      const LossSpec& loss, double lambda) {
  if (num_features < 1) throw std::invalid_argument("feature count must be positive");
  if (removed < 0 || removed > num_features) throw std::invalid_argument("k must lie in [0, F]");
  if (train_count < 1) throw std::invalid_argument("training count must be positive");
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  const auto f = static_cast<double>(num_features);
  const auto m = static_cast<double>(train_count);
  const double kept = static_cast<double>(num_features - removed);
  const double inner = (2.0 * loss.c * std::sqrt(f) + loss.c1 * std::sqrt(kept * m)) / (lambda * std::sqrt(f));
  return loss.gamma2 / m * inner * inner;
}

// ---------------------------------------------------------------------------

struct CertificationBudget {
  double epsilon{1.0};
  double delta{1e-4};
  double epsilon_prime{0.0};
  double accumulated_residual{0.0};

  /// c₀ solving δ = 1.5 e^{−c₀²/2}.
  double c0() const {
    if (!(delta > 0.0 && delta < 1.5)) throw std::invalid_argument("delta must lie in (0, 1.5)");
    return std::sqrt(2.0 * std::log(1.5 / delta));
  }

  bool certified() const { return accumulated_residual <= epsilon_prime; }

  void record(double residual) {
    if (!(residual >= 0.0)) throw std::invalid_argument("residual must be non-negative");
    accumulated_residual += residual;
  }
};

/// Standard deviation of the training perturbation b: c₀ ε′ / ε.
inline double calibrate_noise(const CertificationBudget& budget) {
  if (!(budget.epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (!(budget.epsilon_prime >= 0.0)) throw std::invalid_argument("epsilon' must be non-negative");
  const double c0 = budget.c0();
  if (std::isinf(budget.epsilon)) return 0.0;
  return c0 * budget.epsilon_prime / budget.epsilon;
}

// ---------------------------------------------------------------------------

/// Full retraining on D̃ with the original perturbation, the comparator the
/// Newton step approximates.
inline TrainedModel retrain_oracle(const GraphDataset& edited, const AggregatedFeatures& z_edited,
                                   const TrainConfig& config, const Vector& fixed_b) {
  const TrainingSet ts = training_set(z_edited.values, edited.labels, edited.train_mask);
  return train_with_perturbation(ts, config, fixed_b);
}

struct SequentialOutcome {
  std::vector<UnlearnResult> steps;
  CertificationBudget budget;
  GraphDataset dataset;           // after the last request
  AggregatedFeatures aggregated;  // Z̃ after the last request
  Vector weights;                 // w̃ after the last request
};

/// Applies requests in order, each step starting from the previous step's
/// weights. Residuals accumulate into the budget; losing certification is
/// reported through the budget rather than stopping the sequence.
inline SequentialOutcome sequential_unlearn(const TrainedModel& model, const GraphDataset& ds,
                                            const AggregatedFeatures& z, const AggregationSpec& spec,
                                            std::span<const RemovalRequest> requests,
                                            CertificationBudget budget) {
  SequentialOutcome out;
  const GraphDataset* current = &ds;
  const AggregatedFeatures* current_z = &z;
  Vector weights = model.weights;
  for (const RemovalRequest& request : requests) {
    GraphDataset edited = apply_request(*current, request);
    AggregatedFeatures z_edited = aggregate_after(edited, *current_z, request, spec);
    UnlearnResult step = newton_unlearn(weights, model.perturbation, model.lambda, *current_z, z_edited,
                                        current->labels, current->train_mask, edited.train_mask);
    if (const auto* fr = std::get_if<FeatureRemoval>(&request)) {
      step.worstcase_bound = worstcase_bound_feature(ds.num_features(), static_cast<Index>(fr->features.size()),
                                                     count(current->train_mask), model.loss, model.lambda);
    }
    budget.record(step.residual_norm);
    weights = step.updated_weights;
    out.dataset = std::move(edited);
    out.aggregated = std::move(z_edited);
    current = &out.dataset;
    current_z = &out.aggregated;
    out.steps.push_back(std::move(step));
  }
  if (requests.empty()) {
    out.dataset = ds;
    out.aggregated = z;
  }
  out.weights = std::move(weights);
  out.budget = budget;
  return out;
}

}  // namespace fairwipe
