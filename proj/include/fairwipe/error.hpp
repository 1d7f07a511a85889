#pragma once

#include <stdexcept>
#include <string>

namespace fairwipe {

/// Malformed or inconsistent experiment configuration (CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input data that fails validation: bad files, non-binary attributes,
/// statistics that disagree with a manifest (CLI exit code 3).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The optimizer stopped before reaching the requested gradient tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(double residual, int iterations)
      : std::runtime_error("optimizer did not converge: gradient norm " +
                           std::to_string(residual) + " after " +
                           std::to_string(iterations) + " iterations"),
        residual_(residual),
        iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

}  // namespace fairwipe
