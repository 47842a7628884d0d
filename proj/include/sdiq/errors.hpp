#pragma once

#include <stdexcept>
#include <string>

namespace sdiq {

/// Invalid arguments or flag combinations.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed, truncated or otherwise unreadable input data.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The declared energy bound or another protocol assumption does not hold.
class AssumptionViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Observed probabilities cannot be produced by any strategy that respects
/// the overlap bound. Distinct from a zero min-entropy result.
class InfeasibleData : public AssumptionViolation {
 public:
  using AssumptionViolation::AssumptionViolation;
};

class SolverFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sdiq
