#pragma once

// L2-regularized binary logistic regression on aggregated node features,
// trained with objective perturbation.
//
// The regularizer sits inside the per-sample sum, so for m training rows
//
//   L_b(w) = Σ_i [ℓ(z_iᵀw, y_i) + (λ/2)‖w‖²] + bᵀw
//   ∇L_b   = Σ_i ℓ'(z_iᵀw, y_i) z_i + λ m w + b
//   ∇²L    = Σ_i ℓ''(z_iᵀw) z_i z_iᵀ + λ m I
//
// with ℓ(u, y) = log(1 + eᵘ) − y u.

#include "fairwipe/error.hpp"
#include "fairwipe/graph.hpp"
#include "fairwipe/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace fairwipe {

/// Constants of assumptions i)-iii): ‖∇ℓ‖ ≤ c, |ℓ'| ≤ c1, ℓ'' is gamma2-Lipschitz.
struct LossSpec {
  double c{1.0};
  double c1{1.0};
  double gamma2{0.25};

  static constexpr LossSpec logistic() { return {}; }
};

namespace logistic {

inline double sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

/// log(1 + eᵘ) without overflow.
inline double softplus(double u) {
  return u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
}

inline double loss(double u, double y) { return softplus(u) - y * u; }
inline double first_derivative(double u, double y) { return sigmoid(u) - y; }
inline double second_derivative(double u) {
  const double s = sigmoid(u);
  return s * (1.0 - s);
}

}  // namespace logistic

/// Training rows of Z gathered into a dense block, with labels as reals.
struct TrainingSet {
  Matrix features;  // m x d
  Vector labels;    // m

  Index size() const { return features.rows(); }
  Index width() const { return features.cols(); }
};

inline TrainingSet training_set(const Matrix& z, std::span<const int> labels, const Mask& mask) {
  if (static_cast<Index>(labels.size()) != z.rows() || static_cast<Index>(mask.size()) != z.rows()) {
    throw std::invalid_argument("labels and mask must have one entry per row of Z");
  }
  const std::vector<Index> rows = indices_of(mask);
  const auto m = static_cast<Index>(rows.size());
  TrainingSet ts;
  ts.features.resize(m, z.cols());
  ts.labels.resize(m);
  for (Index r = 0; r < m; ++r) {
    const int y = labels[static_cast<std::size_t>(rows[static_cast<std::size_t>(r)])];
    if (y != 0 && y != 1) throw std::invalid_argument("labels must be in {0,1}");
    ts.labels[r] = y;
  }
  // column by column: Z is column-major
  for (Index c = 0; c < z.cols(); ++c) {
    const double* src = z.col(c).data();
    double* dst = ts.features.col(c).data();
    for (Index r = 0; r < m; ++r) dst[r] = src[rows[static_cast<std::size_t>(r)]];
  }
  return ts;
}

struct ObjectiveValue {
  double value{0.0};
  Vector gradient;
};

/// Σ ℓ'(z_iᵀw, y_i) z_i, the data part of the gradient.
inline Vector loss_gradient_sum(const Vector& w, const TrainingSet& ts) {
  if (w.size() != ts.width()) throw std::invalid_argument("weight dimension does not match Z width");
  const Vector scores = ts.features * w;
  Vector residual(scores.size());
  for (Index i = 0; i < scores.size(); ++i) {
    residual[i] = logistic::first_derivative(scores[i], ts.labels[i]);
  }
  return ts.features.transpose() * residual;
}

/// Σ_{i∈mask} ℓ'(z_iᵀw, y_i) z_i straight from the full matrix, without
/// gathering the training rows.
inline Vector loss_gradient_sum(const Vector& w, const Matrix& z, std::span<const int> labels, const Mask& mask) {
  if (w.size() != z.cols()) throw std::invalid_argument("weight dimension does not match Z width");
  const Vector scores = z * w;
  Vector residual = Vector::Zero(z.rows());
  for (Index i = 0; i < z.rows(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (mask[k]) residual[i] = logistic::first_derivative(scores[i], labels[k]);
  }
  return z.transpose() * residual;
}

inline ObjectiveValue loss_and_gradient(const Vector& w, const TrainingSet& ts, double lambda,
                                        const Vector& perturbation) {
  if (w.size() != ts.width()) throw std::invalid_argument("weight dimension does not match Z width");
  if (perturbation.size() != 0 && perturbation.size() != w.size()) {
    throw std::invalid_argument("perturbation dimension does not match weights");
  }
  const auto m = static_cast<double>(ts.size());
  const Vector scores = ts.features * w;
  Vector residual(scores.size());
  double value = 0.0;
  for (Index i = 0; i < scores.size(); ++i) {
    value += logistic::loss(scores[i], ts.labels[i]);
    residual[i] = logistic::first_derivative(scores[i], ts.labels[i]);
  }
  ObjectiveValue out;
  out.value = value + 0.5 * lambda * m * w.squaredNorm();
  out.gradient = ts.features.transpose() * residual + (lambda * m) * w;
  if (perturbation.size() != 0) {
    out.value += perturbation.dot(w);
    out.gradient += perturbation;
  }
  return out;
}

inline ObjectiveValue loss_and_gradient(const Vector& w, const TrainingSet& ts, double lambda) {
  return loss_and_gradient(w, ts, lambda, Vector());
}

namespace detail {

/// Σ_r s_r s_rᵀ + shift·I for the rows s_r of `scaled`.
inline Matrix gram_plus_identity(const Matrix& scaled, double shift) {
  Matrix h = Matrix::Zero(scaled.cols(), scaled.cols());
  h.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose());
  h.diagonal().array() += shift;
  return h.selfadjointView<Eigen::Lower>();
}

}  // namespace detail

/// Σ ℓ''(z_iᵀw) z_i z_iᵀ + λ m I; symmetric positive definite for λ > 0.
inline Matrix hessian(const Vector& w, const TrainingSet& ts, double lambda) {
  if (w.size() != ts.width()) throw std::invalid_argument("weight dimension does not match Z width");
  const Vector scores = ts.features * w;
  Vector root(scores.size());
  for (Index i = 0; i < scores.size(); ++i) root[i] = std::sqrt(logistic::second_derivative(scores[i]));
  return detail::gram_plus_identity(root.asDiagonal() * ts.features, lambda * static_cast<double>(ts.size()));
}

/// Same Hessian over the rows of `z` selected by `mask`. Selected rows are
/// gathered and scaled by sqrt(ℓ'') in cache-sized blocks.
inline Matrix hessian(const Vector& w, const Matrix& z, const Mask& mask, double lambda) {
  if (w.size() != z.cols()) throw std::invalid_argument("weight dimension does not match Z width");
  constexpr Index kBlock = 512;
  const std::vector<Index> rows = indices_of(mask);
  const auto m = static_cast<Index>(rows.size());
  const Index d = z.cols();
  const Vector scores = z * w;
  Vector root(m);
  for (Index r = 0; r < m; ++r) root[r] = std::sqrt(logistic::second_derivative(scores[rows[static_cast<std::size_t>(r)]]));
  Matrix h = Matrix::Zero(d, d);
  Matrix block(std::min(kBlock, m), d);
  for (Index start = 0; start < m; start += kBlock) {
    const Index len = std::min(kBlock, m - start);
    for (Index c = 0; c < d; ++c) {
      const double* src = z.col(c).data();
      for (Index r = 0; r < len; ++r) block(r, c) = root[start + r] * src[rows[static_cast<std::size_t>(start + r)]];
    }
    h.selfadjointView<Eigen::Lower>().rankUpdate(block.topRows(len).transpose());
  }
  h.diagonal().array() += lambda * static_cast<double>(m);
  return h.selfadjointView<Eigen::Lower>();
}

// ---------------------------------------------------------------------------

struct TrainConfig {
  double lambda{10.0};
  double tolerance{1e-8};
  int max_iterations{500};
  std::uint64_t seed{0};
};

struct TrainedModel {
  Vector weights;
  Vector perturbation;  // b; all zeros when trained without noise
  double lambda{10.0};
  double optimizer_residual{0.0};
  int iterations{0};
  LossSpec loss{LossSpec::logistic()};
};

/// b with i.i.d. Normal(0, noise_std²) entries drawn from `seed`.
inline Vector draw_perturbation(Index dim, double noise_std, std::uint64_t seed) {
  if (!(noise_std >= 0.0)) throw std::invalid_argument("noise standard deviation must be non-negative");
  Vector b = Vector::Zero(dim);
  if (noise_std == 0.0) return b;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, noise_std);
  for (Index j = 0; j < dim; ++j) b[j] = normal(rng);
  return b;
}

/// Minimizes L_b over a prepared training set with a fixed perturbation.
inline TrainedModel train_with_perturbation(const TrainingSet& ts, const TrainConfig& config,
                                            const Vector& perturbation) {
  if (!(config.lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  if (!(config.tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (ts.size() == 0) throw std::invalid_argument("training set is empty");
  if (perturbation.size() != ts.width()) throw std::invalid_argument("perturbation dimension mismatch");

  Vector w = Vector::Zero(ts.width());
  LbfgsOptions opt;
  opt.gradient_tolerance = config.tolerance;
  opt.max_iterations = config.max_iterations;
  const auto report = minimize_lbfgs(
      [&](const Vector& x, Vector& grad) {
        ObjectiveValue ov = loss_and_gradient(x, ts, config.lambda, perturbation);
        grad = std::move(ov.gradient);
        return ov.value;
      },
      w, opt);
  if (!report.converged) throw ConvergenceError(report.gradient_norm, report.iterations);

  TrainedModel model;
  model.weights = std::move(w);
  model.perturbation = perturbation;
  model.lambda = config.lambda;
  model.optimizer_residual = report.gradient_norm;
  model.iterations = report.iterations;
  return model;
}

/// Objective-perturbed training on the training rows of `z`.
inline TrainedModel train(const GraphDataset& ds, const AggregatedFeatures& z, const TrainConfig& config,
                          double noise_std) {
  if (z.rows() != ds.num_nodes()) throw std::invalid_argument("aggregated features do not match dataset");
  const TrainingSet ts = training_set(z.values, ds.labels, ds.train_mask);
  const Vector b = draw_perturbation(z.width(), noise_std, config.seed);
  return train_with_perturbation(ts, config, b);
}

struct Prediction {
  Vector scores;
  std::vector<int> labels;
};

/// label = 1 iff zᵀw > 0; a score of exactly 0 maps to class 0.
inline Prediction predict(const Vector& weights, const Matrix& z) {
  if (weights.size() != z.cols()) throw std::invalid_argument("weight dimension does not match Z width");
  Prediction p;
  p.scores = z * weights;
  p.labels.resize(static_cast<std::size_t>(p.scores.size()));
  for (Index i = 0; i < p.scores.size(); ++i) p.labels[static_cast<std::size_t>(i)] = p.scores[i] > 0.0 ? 1 : 0;
  return p;
}

inline Prediction predict(const TrainedModel& model, const AggregatedFeatures& z) {
  return predict(model.weights, z.values);
}

inline double accuracy(std::span<const int> predicted, std::span<const int> labels, const Mask& mask) {
  Index hits = 0;
  Index total = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    ++total;
    if (predicted[i] == labels[i]) ++hits;
  }
  if (total == 0) throw std::invalid_argument("accuracy over an empty mask");
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace fairwipe
