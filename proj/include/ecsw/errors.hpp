#pragma once

#include <stdexcept>
#include <string>

namespace ecsw {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Construction data violates a RoterSpec invariant.
struct SpecError : Error {
  using Error::Error;
};

/// Malformed or inconsistent suite configuration.
struct ConfigError : Error {
  using Error::Error;
};

/// A non-finite value appeared during integration or evaluation.
struct NumericalAbort : Error {
  using Error::Error;
};

}  // namespace ecsw
