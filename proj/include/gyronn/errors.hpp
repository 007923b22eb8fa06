#pragma once

#include <stdexcept>
#include <string>

namespace gyronn {

/// Bad user input: parameter files, configs, dimension contracts.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Numerical failure that is not a user error.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularMatrixError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A trajectory left the finite / physical region.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(double time, const std::string& what)
      : NumericalError(what + " (t=" + std::to_string(time) + " s)"), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace gyronn
