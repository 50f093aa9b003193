#pragma once

#include <stdexcept>
#include <string>

namespace hslab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidArgument : Error {
  using Error::Error;
};

/// An integral that diverges for the requested parameters (e.g. ∫ũ² for n ≤ 4).
struct IntegrabilityError : Error {
  using Error::Error;
};

/// Iterative or adaptive procedure missed its target; carries the achieved error.
struct ConvergenceError : Error {
  ConvergenceError(const std::string& what, double achieved)
      : Error(what), achieved_error(achieved) {}
  double achieved_error;
};

struct NonCoerciveError : Error {
  NonCoerciveError(const std::string& what, double eigenvalue)
      : Error(what), smallest_eigenvalue(eigenvalue) {}
  double smallest_eigenvalue;
};

}  // namespace hslab
