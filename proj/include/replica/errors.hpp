#pragma once

#include <stdexcept>
#include <string>

namespace replica {

// Bad user-supplied configuration (unknown keys, inconsistent dimensions, ...).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Argument outside the mathematical domain of an operation.
struct DomainError : std::domain_error {
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// Numerical failure (bracket not found, NaN/overflow mid-iteration, ...).
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace replica
