#pragma once

#include <stdexcept>
#include <string>

namespace yflow {

// A numerical solve did not reach its tolerance or produced an inadmissible
// state (non-positive conformal factor, singular pivot, trivial solution).
class SolverFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A backward-Euler step could not be completed; the caller may retry with a
// smaller time step.
class StepRejected : public SolverFailure {
 public:
  using SolverFailure::SolverFailure;
};

// A check or solver was called on inputs outside its domain of validity.
class PreconditionViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Scenario configuration failed validation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace yflow
