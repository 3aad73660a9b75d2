#pragma once

#include <stdexcept>
#include <string>

namespace relcont {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// evaluation outside a chart's interval box (minus any stencil margin)
struct BoundsError : Error {
  using Error::Error;
};

// singular matrix met while inverting a metric or Jacobian
struct SingularError : Error {
  using Error::Error;
};

// Newton inversion of a tube map failed to converge
struct InversionError : Error {
  using Error::Error;
};

// a state violates a structural precondition (signature, degeneracy, ...)
struct StateError : Error {
  using Error::Error;
};

// bad user-facing configuration (unknown scene, malformed key, ...)
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace relcont
