#pragma once

#include <stdexcept>
#include <string>

namespace evoel {

/// Dimension or layout mismatch between operands.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A matrix that must be inverted is singular (or numerically so).
class SingularError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A linear solve missed its residual target.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// A precondition of a reduction or model constructor does not hold.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace evoel
