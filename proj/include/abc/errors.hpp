#pragma once

#include <stdexcept>
#include <string>

namespace abc {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tensor shapes do not conform (wrong rank, extent, or channel count).
struct DimensionError : Error {
  using Error::Error;
};

// Invalid configuration or input value (even kernel extent, bad proportions,
// empty question, unknown activation kind, ...).
struct ConfigError : Error {
  using Error::Error;
};

// An operation precondition was violated (non-scalar loss, backward on a
// tensor the graph did not produce, mismatched list lengths, ...).
struct ContractError : Error {
  using Error::Error;
};

// Non-finite values appeared where finite ones are required.
struct NumericError : Error {
  using Error::Error;
};

// Checkpoint and dataset do not belong together (vocabulary hash mismatch).
struct CompatibilityError : Error {
  using Error::Error;
};

// File could not be read, written, or parsed.
struct IoError : Error {
  using Error::Error;
};

}  // namespace abc
