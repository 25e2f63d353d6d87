#pragma once

#include <stdexcept>
#include <string>

namespace ness {

/// Violated precondition: bad index, length mismatch, invalid configuration.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of a function (e.g. negative theta).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A truncation or quadrature could not reach its declared tolerance.
class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Iterative method failed to converge within its iteration cap.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every optimizer start failed to make progress.
class OptimizationError : public NumericError {
 public:
  OptimizationError(const std::string& what, std::string diagnostics)
      : NumericError(what), diagnostics_(std::move(diagnostics)) {}

  const std::string& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::string diagnostics_;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractError(message);
}

}  // namespace ness
