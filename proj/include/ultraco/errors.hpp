#pragma once

#include <stdexcept>
#include <string>

namespace ultraco {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Input that cannot be turned into a well-formed object (missing table
/// entries, unknown labels, unparsable files).
class MalformedInputError : public Error {
public:
  using Error::Error;
};

/// An exhaustive oracle was asked to enumerate more than it is built for.
class SizeLimitError : public Error {
public:
  using Error::Error;
};

/// An operation was called on an argument that violates its documented
/// precondition. The message carries the witness.
class PreconditionError : public Error {
public:
  using Error::Error;
};

class DimensionMismatchError : public Error {
public:
  using Error::Error;
};

class InvalidHeightError : public Error {
public:
  using Error::Error;
};

} // namespace ultraco
