#pragma once

#include <stdexcept>
#include <string>

namespace dualqp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent dimensions or malformed input data.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input describes an empty or ill-posed problem (lb > ub, NaN, ...).
class InfeasibleSpecError : public Error {
 public:
  using Error::Error;
};

/// A NaN or infinity appeared inside an iteration.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// An iterative kernel hit its iteration cap. Carries the best estimate.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double best_estimate)
      : Error(what), best_estimate_(best_estimate) {}

  double best_estimate() const { return best_estimate_; }

 private:
  double best_estimate_;
};

}  // namespace dualqp
