#pragma once

#include <stdexcept>
#include <string>

namespace esdlab {

// Invalid sizes, parameters or configuration documents.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operator that must be invertible (or full rank) is not.
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A point coincides with an atom of a measure where the integrand is singular.
class SingularityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An iterative kernel ran out of budget or a quadrature failed to settle.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, double last_residual = 0.0)
      : std::runtime_error(what), last_residual_(last_residual) {}
  double last_residual() const { return last_residual_; }

 private:
  double last_residual_;
};

// Fixed-point solver converged onto the wrong half-plane.
class BranchError : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

}  // namespace esdlab
