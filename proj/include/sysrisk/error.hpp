#pragma once

#include <stdexcept>
#include <string>

namespace sysrisk {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// |rho| too close to 1 for an operation that needs a regular density.
class DegenerateCorrelationError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Diversification count exceeds the market it is evaluated against.
class StrategyMismatchError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Invalid numerical configuration (grid spec, simulation settings, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A computation produced a non-finite or otherwise unusable value.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace sysrisk
