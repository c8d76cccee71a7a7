#pragma once

#include <stdexcept>
#include <string>

namespace dreptile {

/// Caller broke a documented precondition (length mismatch, bad argument).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Inconsistent or invalid configuration values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or insufficient data (empty source, span out of range, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Slot lookup failed or slot kind does not match the model.
class RegistryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Metric computed over invalid input.
class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Finite-difference oracle produced a non-finite probe.
class OracleFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dreptile
