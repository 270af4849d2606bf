#pragma once

#include <stdexcept>
#include <string>

namespace fds {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Bad argument or malformed input (empty matrix, NaN entries, bad flag).
class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// A pivot, core matrix or front could not be inverted.
class SingularMatrixError : public Error {
public:
  using Error::Error;
};

/// An iterative kernel ran out of iterations.
class ConvergenceError : public Error {
public:
  using Error::Error;
};

/// Geometric precondition violated (separation, interior targets, ...).
class PreconditionError : public Error {
public:
  using Error::Error;
};

} // namespace fds
