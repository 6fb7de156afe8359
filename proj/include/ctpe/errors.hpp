#pragma once

#include <stdexcept>
#include <string>

namespace ctpe {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Violated precondition or argument outside the supported domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Numerical failure at runtime: singular systems, divergent paths, empty
// samples. Distinct from DomainError so callers can map exit codes.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Linear solve hit an (effectively) zero pivot; pivot_index names the
// elimination column that failed.
class SingularSystemError : public NumericalError {
 public:
  SingularSystemError(const std::string& what, int pivot)
      : NumericalError(what), pivot_index(pivot) {}
  int pivot_index;
};

// Simulated state left the representable range; step is the first bad index.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& what, long long at_step)
      : NumericalError(what), step(at_step) {}
  long long step;
};

// Not enough usable samples to assemble an estimator.
class InsufficientDataError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Malformed or unresolvable configuration input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace ctpe
