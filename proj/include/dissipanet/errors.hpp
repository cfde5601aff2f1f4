#pragma once

#include <stdexcept>
#include <string>

namespace dissipanet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree. The message names the offending block.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A state became non-finite while stepping.
class NumericalDivergence : public Error {
 public:
  NumericalDivergence(const std::string& what, std::string component, long step)
      : Error(what), component_(std::move(component)), step_(step) {}

  const std::string& component() const { return component_; }
  long step() const { return step_; }

 private:
  std::string component_;
  long step_;
};

/// The dissipativity-ensuring set (intersected with the action box) is empty.
class InfeasibleConstraint : public Error {
 public:
  using Error::Error;
};

/// The constraint is outside the classes the projection solves exactly.
class UnsupportedConstraint : public Error {
 public:
  using Error::Error;
};

/// A numerical routine did not converge within its iteration budget.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// A model or scenario parameter is outside its admissible range.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// Configuration could not be parsed or validated.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A structural network assumption failed its pre-check.
class AssumptionFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace dissipanet
