#pragma once

#include <stdexcept>
#include <string>

namespace pfimex {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A field contains NaN/Inf where finite values are required.
class InvalidField : public Error {
 public:
  using Error::Error;
};

/// A half-spectrum that does not describe a real field.
class SpectrumError : public Error {
 public:
  using Error::Error;
};

/// Wrong number of vector components for the grid dimension.
class ArityError : public Error {
 public:
  using Error::Error;
};

/// Two fields that must share a grid do not.
class GridError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Snapshot header disagrees with what the reader expects.
class HeaderMismatch : public Error {
 public:
  using Error::Error;
};

/// Snapshot file is malformed or truncated.
class SnapshotError : public Error {
 public:
  using Error::Error;
};

/// Failure of the time integration itself (as opposed to bad input).
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class BlowupDetected : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

/// Thin-film state dropped to or below its positivity floor.
class PositivityViolation : public NumericalFailure {
 public:
  PositivityViolation(const std::string& what, double min_value, std::size_t index)
      : NumericalFailure(what), min_value_(min_value), index_(index) {}

  double min_value() const { return min_value_; }
  std::size_t index() const { return index_; }

 private:
  double min_value_;
  std::size_t index_;
};

}  // namespace pfimex
