#pragma once

#include <stdexcept>
#include <string>

namespace s2cgan {

// Base of every error thrown by the library. Messages are prefixed with the
// operation that failed, e.g. "matmul: inner extents differ (2x3 vs 4x1)".
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

// Caller passed arguments that violate a documented precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class UnsupportedTask : public Error {
 public:
  using Error::Error;
};

// NaN/Inf detected in a gradient during training.
class NumericError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string pointer, const std::string& what)
      : Error(pointer + ": " + what), pointer_(std::move(pointer)) {}
  // JSON pointer to the offending key, e.g. "/optimizer/lr_d".
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace s2cgan
