#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cpda {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Geometry and argument validation.
class InvalidGeometry : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A probability outside [0,1] or non-finite.
class OutOfRange : public Error {
 public:
  OutOfRange(std::size_t index, double value);

  std::size_t index() const noexcept { return index_; }
  double value() const noexcept { return value_; }

 private:
  std::size_t index_;
  double value_;
};

// File-level failures. All of these map to the I/O exit code in the CLI.
class IoError : public Error {
 public:
  using Error::Error;
};

class Malformed : public IoError {
 public:
  using IoError::IoError;
};

class UnsupportedFormat : public IoError {
 public:
  using IoError::IoError;
};

/// Anything raised while talking to a classifier backend.
class BackendError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public BackendError {
 public:
  using BackendError::BackendError;
};

class BackendUnavailable : public BackendError {
 public:
  using BackendError::BackendError;
};

class ProtocolError : public BackendError {
 public:
  using BackendError::BackendError;
};

/// Wraps a backend failure with the position of the offending element in a batch.
class BatchElementError : public BackendError {
 public:
  BatchElementError(std::size_t index, const std::string& what);

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class EmptyGroups : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class RegionOutOfBounds : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class InsufficientBank : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class EnumerationBudgetExceeded : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

}  // namespace cpda
