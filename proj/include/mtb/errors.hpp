#pragma once

#include <stdexcept>
#include <string>

namespace mtb {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed or out-of-range user configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: the computation ran but its result cannot be trusted.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Energy reached the edges of the simulation window.
class GridOverflow : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Step refinement did not settle within the retry limit.
class NonConvergence : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// No admissible point exists for a constrained design.
class Infeasible : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace mtb
