#pragma once

#include <stdexcept>
#include <string>

namespace cocabo {

/// Raised when a caller breaks an operation's precondition (dimension
/// mismatch, index out of range, reward outside [0,1], ...).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a covariance matrix cannot be factorised even after jitter
/// escalation, or when non-finite values show up in kernel evaluations.
class NumericalFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by objective evaluators (external process died, malformed reply,
/// timeout, non-finite value).
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace cocabo
