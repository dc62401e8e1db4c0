#pragma once

#include <stdexcept>
#include <string>

namespace entangle {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter lies outside its documented domain (mu outside (0,1], negative latency, ...).
/// `field()` names the offending parameter so front ends can report it.
class ParameterError : public Error {
 public:
  ParameterError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Request exceeds a hard size limit (qubit count, player count, path enumeration).
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// No route exists between the requested endpoints.
class UnreachableError : public Error {
 public:
  using Error::Error;
};

/// Scenario arguments do not describe a valid scenario shape.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Caller violated an operation's precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

}  // namespace entangle
