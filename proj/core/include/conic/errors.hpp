#pragma once

#include <stdexcept>
#include <string>

namespace conic {

// Base class for every error raised by the library. The CLI maps the
// subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the domain of an operation (r <= 1, empty grid, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Metric tensor not positive definite / singular.
class MetricValidityError : public Error {
 public:
  using Error::Error;
};

// Trajectory left the end chart (1, inf) x S^1.
class ChartExitError : public Error {
 public:
  ChartExitError(const std::string& what, double last_valid_time)
      : Error(what), last_valid_time_(last_valid_time) {}
  double last_valid_time() const noexcept { return last_valid_time_; }

 private:
  double last_valid_time_;
};

// Adaptive integrator could not make progress.
class StiffnessError : public Error {
 public:
  using Error::Error;
};

// Grid does not resolve the requested scale.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

// Two grids that must coincide do not.
class ResamplingError : public Error {
 public:
  using Error::Error;
};

// Time step above the accuracy budget. Carries the largest admissible dt.
class BudgetError : public Error {
 public:
  BudgetError(const std::string& what, double required_dt)
      : Error(what), required_dt_(required_dt) {}
  double required_dt() const noexcept { return required_dt_; }

 private:
  double required_dt_;
};

// Scenario file does not match the schema.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace conic
