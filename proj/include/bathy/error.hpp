#pragma once

#include <stdexcept>
#include <string>

namespace bathy {

// Error categories map one-to-one onto CLI exit codes, see tools/main.cpp.

/// Invalid parameter or configuration value.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable, missing or malformed input data.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Model file carries a version tag this build does not understand.
class VersionError : public InputError {
 public:
  using InputError::InputError;
};

/// A numerical routine could not produce a meaningful result.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Regression design has fewer than two distinct abscissae.
class DegenerateDesign : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace bathy
