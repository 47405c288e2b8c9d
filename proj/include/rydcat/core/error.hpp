#pragma once

#include <stdexcept>
#include <string>

namespace rydcat {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or parameters supplied by the caller.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// A numerical procedure failed (eigensolver, root search, optimizer).
class NumericError : public Error {
  public:
    using Error::Error;
};

/// Evaluation attempted on a coordinate singularity (e.g. a pole of the Bloch sphere).
class SingularityError : public NumericError {
  public:
    using NumericError::NumericError;
};

/// Atomic data missing or malformed.
class DataError : public Error {
  public:
    using Error::Error;
};

} // namespace rydcat
