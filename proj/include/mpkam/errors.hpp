#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mpkam {

/// Root of the library's error hierarchy.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A documented precondition was violated by the caller (dimension mismatch,
/// negative action, malformed configuration, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// A numerical quantity left the domain where it is meaningful.
class NumericDomainError : public Error {
 public:
  using Error::Error;
};

class NearSingularityError : public NumericDomainError {
 public:
  NearSingularityError(const std::string& what, std::ptrdiff_t node = -1)
      : NumericDomainError(what), node_(node) {}
  [[nodiscard]] std::ptrdiff_t node() const { return node_; }
  NearSingularityError with_node(std::ptrdiff_t node) const;

 private:
  std::ptrdiff_t node_;
};

class ChartSingularityError : public NumericDomainError {
 public:
  using NumericDomainError::NumericDomainError;
};

class IntegrationFailure : public NumericDomainError {
 public:
  IntegrationFailure(const std::string& what, std::size_t step)
      : NumericDomainError(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  [[nodiscard]] std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

/// The simulated state left the declared domain box.
class DomainExit : public NumericDomainError {
 public:
  explicit DomainExit(std::size_t step)
      : NumericDomainError("state left the domain box at step " + std::to_string(step)),
        step_(step) {}
  [[nodiscard]] std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

class SamplingTooCoarseError : public NumericDomainError {
 public:
  using NumericDomainError::NumericDomainError;
};

class InvalidParameters : public ContractViolation {
 public:
  using ContractViolation::ContractViolation;
};

/// Every point of a large-deviation curve was unusable.
class EmptyCurveError : public NumericDomainError {
 public:
  using NumericDomainError::NumericDomainError;
};

inline NearSingularityError NearSingularityError::with_node(std::ptrdiff_t node) const {
  return NearSingularityError(std::string(what()) + " at node " + std::to_string(node), node);
}

}  // namespace mpkam
