#pragma once

#include <stdexcept>
#include <string>

namespace sfgof {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values, overflow, or blow-up during a numerical procedure.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation (e.g. alpha not in (0,1)).
class DomainError : public Error {
 public:
  using Error::Error;
};

// The model itself violates an assumption: zero Fisher information,
// non-normalizable invariant law, non-monotone moment map, ...
class ModelError : public Error {
 public:
  using Error::Error;
};

// Inconsistent or insufficient configuration (window too short, missing
// derivative, unknown model id, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace sfgof
