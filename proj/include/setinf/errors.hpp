#pragma once

#include <stdexcept>
#include <string>

namespace setinf {

// Base of every error thrown by the library. The CLI maps each subclass to
// an exit code (see exit_code_for).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad argument values: out-of-domain inputs, parameters outside the box.
struct DomainError : Error {
  using Error::Error;
};

// Malformed or inconsistent configuration.
struct ConfigError : Error {
  using Error::Error;
};

// Numerical failure: infeasible polytope, KKT breakdown, singular matrices.
struct NumericError : Error {
  using Error::Error;
};

struct InfeasibleError : NumericError {
  using NumericError::NumericError;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace setinf
