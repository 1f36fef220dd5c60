#pragma once

#include <stdexcept>
#include <string>

namespace doilab {

// Invalid user input or configuration. The CLI maps this to exit code 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Base for failures of a numerical procedure. The CLI maps these to exit code 2.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : NumericalError {
  using NumericalError::NumericalError;
};

struct ConvergenceError : NumericalError {
  using NumericalError::NumericalError;
};

struct StabilityError : NumericalError {
  using NumericalError::NumericalError;
};

// Raised when a second moment lies outside the open feasible set.
struct InfeasibleMoment : NumericalError {
  InfeasibleMoment(const std::string& what, long site = -1)
      : NumericalError(what), site_(site) {}
  long site() const noexcept { return site_; }

 private:
  long site_;
};

struct SingularityError : NumericalError {
  using NumericalError::NumericalError;
};

}  // namespace doilab
