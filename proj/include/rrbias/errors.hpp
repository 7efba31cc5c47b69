#pragma once

#include <stdexcept>
#include <string>

namespace rrbias {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or parameter; carries the offending field name.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Problem size exceeds a hard cap (state space or enumeration budget).
class SizeLimitError : public Error {
 public:
  using Error::Error;
};

/// Integration or root finding failed to meet its tolerance.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A quantity is mathematically undefined for the given inputs (e.g. 0/0).
class UndefinedError : public Error {
 public:
  using Error::Error;
};

/// An operation's precondition on the parameters does not hold.
class NotApplicableError : public Error {
 public:
  using Error::Error;
};

/// A sampling loop exhausted its attempt budget without making progress.
class ProgressError : public Error {
 public:
  using Error::Error;
};

}  // namespace rrbias
