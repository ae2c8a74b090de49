#pragma once

#include <stdexcept>
#include <string>

namespace hostlab {

// Bad parameters or inputs outside an operation's domain. Maps to CLI exit 2.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Conditioning on a cylinder of zero mass.
class NullCylinderError : public InputError {
 public:
  explicit NullCylinderError(const std::string& what)
      : InputError("conditioning on null atom: " + what) {}
};

// Level too coarse for the requested radius (correlation guard).
class ResolutionError : public InputError {
 public:
  using InputError::InputError;
};

// Memory/level budget exceeded. Maps to CLI exit 3.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Not enough retained digits or float bits for an exact answer. CLI exit 3.
class PrecisionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Quadrature failed to reach its tolerance within the node budget. CLI exit 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hostlab
