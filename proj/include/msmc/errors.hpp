#pragma once

#include <stdexcept>
#include <string>

namespace msmc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input that the caller could have checked (lengths, ranges, config values).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: the weighted system has no mass left, or a mixture
/// denominator vanished.
class ExtinctionError : public Error {
 public:
  using Error::Error;
};

/// Quadrature lost more mass than the configured tolerance allows.
class QuadratureError : public Error {
 public:
  using Error::Error;
};

/// A density was requested from a kernel that can only be sampled.
class IntractableDensityError : public Error {
 public:
  using Error::Error;
};

}  // namespace msmc
