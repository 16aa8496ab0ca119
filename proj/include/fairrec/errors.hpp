#pragma once

#include <stdexcept>
#include <string>

namespace fairrec {

// Invalid simulation or experiment configuration. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The signal strength is too weak for the requested bound (p <= 0.5).
class InvalidSignal : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Malformed or inconsistent input data (snapshots, CSV files). CLI exit code 3.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller violated a documented precondition.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Not enough samples to form an estimate.
class AggregationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fairrec
