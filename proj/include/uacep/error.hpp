#pragma once

#include <stdexcept>
#include <string>

namespace uacep {

// Bad input: malformed files, violated preconditions, invalid meshes.
// The CLI maps these to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Failure while doing otherwise valid work (solver divergence, I/O).
// The CLI maps these to exit code 2.
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SolverError : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

}  // namespace uacep
