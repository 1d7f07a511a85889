#pragma once

// Limited-memory BFGS for smooth, strongly convex objectives.
//
// The line search enforces the weak Wolfe conditions, with the sufficient
// decrease test relaxed to the approximate-Wolfe form once function values
// stop resolving the decrease. Large sums reach that floor well before the
// gradient reaches tight absolute tolerances.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <vector>

namespace fairwipe {

struct LbfgsOptions {
  int memory{10};
  double gradient_tolerance{1e-8};  // absolute, on the Euclidean norm
  int max_iterations{500};
  int max_line_search{60};
  double armijo{1e-4};
  double curvature{0.9};
};

struct LbfgsReport {
  int iterations{0};
  int evaluations{0};
  double gradient_norm{0.0};
  double value{0.0};
  bool converged{false};
};

/// Minimizes `objective(x, grad) -> value` starting from `x` (updated in place).
template <class Objective>
LbfgsReport minimize_lbfgs(Objective&& objective, Eigen::VectorXd& x, const LbfgsOptions& opt) {
  using Eigen::VectorXd;
  struct Pair {
    VectorXd s;
    VectorXd y;
    double rho;
  };

  LbfgsReport report;
  VectorXd grad(x.size());
  double value = objective(x, grad);
  ++report.evaluations;
  double gnorm = grad.norm();
  std::deque<Pair> history;

  VectorXd direction(x.size());
  VectorXd x_trial(x.size());
  VectorXd g_trial(x.size());
  std::vector<double> alpha_hist;

  while (gnorm > opt.gradient_tolerance && report.iterations < opt.max_iterations) {
    // two-loop recursion
    direction = -grad;
    alpha_hist.assign(history.size(), 0.0);
    for (std::size_t j = history.size(); j-- > 0;) {
      alpha_hist[j] = history[j].rho * history[j].s.dot(direction);
      direction -= alpha_hist[j] * history[j].y;
    }
    if (!history.empty()) {
      const Pair& last = history.back();
      direction *= last.s.dot(last.y) / last.y.squaredNorm();
    }
    for (std::size_t j = 0; j < history.size(); ++j) {
      const double beta = history[j].rho * history[j].y.dot(direction);
      direction += (alpha_hist[j] - beta) * history[j].s;
    }

    double slope0 = grad.dot(direction);
    if (!(slope0 < 0.0)) {
      history.clear();
      direction = -grad;
      slope0 = -gnorm * gnorm;
    }

    double step = history.empty() ? std::min(1.0, 1.0 / gnorm) : 1.0;
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    double trial_value = value;
    bool accepted = false;
    const double value_slack = 1e-12 * std::abs(value);
    for (int ls = 0; ls < opt.max_line_search; ++ls) {
      x_trial = x + step * direction;
      trial_value = objective(x_trial, g_trial);
      ++report.evaluations;
      const double slope = g_trial.dot(direction);
      const bool armijo = trial_value <= value + opt.armijo * step * slope0;
      const bool approx_wolfe = trial_value <= value + value_slack &&
                                slope <= (2.0 * 0.1 - 1.0) * slope0;
      if (!std::isfinite(trial_value) || !(armijo || approx_wolfe)) {
        hi = step;
      } else if (slope < opt.curvature * slope0) {
        lo = step;
      } else {
        accepted = true;
        break;
      }
      step = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * step;
    }
    if (!accepted) break;

    Pair pair{x_trial - x, g_trial - grad, 0.0};
    const double sy = pair.s.dot(pair.y);
    x.swap(x_trial);
    grad.swap(g_trial);
    value = trial_value;
    gnorm = grad.norm();
    ++report.iterations;
    if (sy > 0.0) {
      pair.rho = 1.0 / sy;
      history.push_back(std::move(pair));
      if (static_cast<int>(history.size()) > opt.memory) history.pop_front();
    }
  }

  report.value = value;
  report.gradient_norm = gnorm;
  report.converged = gnorm <= opt.gradient_tolerance;
  return report;
}

}  // namespace fairwipe
