#pragma once

#include <stdexcept>
#include <string>

namespace bsdej {

/// Malformed input: bad shapes, non-positive sizes, out-of-range parameters.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A configured size cap (tree nodes, enumerated paths) would be exceeded.
class ResourceLimit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The implicit step y = E + f(y) dt is not a contraction (kappa * dt >= 1).
class StepSizeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An inner fixed point failed to converge within its iteration budget.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rank-deficient regression design at some time step.
class ConditioningError : public std::runtime_error {
 public:
  ConditioningError(const std::string& what, int step) : std::runtime_error(what), step_(step) {}
  int step() const noexcept { return step_; }

 private:
  int step_;
};

}  // namespace bsdej
