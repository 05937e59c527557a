#pragma once

#include <stdexcept>
#include <string>

namespace phm {

/// Rejected configuration or construction input (bad matrix, unknown key, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A precondition of an operation was violated by its arguments.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure could not produce a trustworthy answer.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IntegrationError : public NumericalError {
 public:
  IntegrationError(const std::string& what, long steps, double last_step, double time_reached)
      : NumericalError(what), steps(steps), last_step(last_step), time_reached(time_reached) {}
  long steps;
  double last_step;
  double time_reached;
};

/// Raised by pipelines run in assertion mode when a diagnostic misses its bound.
class AssertionFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace phm
