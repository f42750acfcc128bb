#pragma once

#include <stdexcept>
#include <string>

namespace scrub {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration, manifest or argument shape. CLI exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Inputs with mismatched dimensions.
class DimensionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Labels that cannot train a classifier (single class, empty).
class DegenerateLabelError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Data that is present but corrupt: non-finite values, length mismatches. CLI exit code 3.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

/// Malformed container header or payload. CLI exit code 3.
class FormatError : public IntegrityError {
 public:
  using IntegrityError::IntegrityError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace scrub
