#pragma once

#include <stdexcept>
#include <string>

namespace germforge {

/// Base class of all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A function was evaluated outside its domain (division by zero, sqrt of a
/// non-positive number, singular metric at a point, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed input: bad files, mismatched shapes, invalid indices.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of an operation does not hold for the inputs
/// (wrong dimension, incompatible structures, signature mismatch, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A construction finished but one of its verified postconditions failed.
class VerificationError : public Error {
 public:
  using Error::Error;
};

}  // namespace germforge
