#pragma once

#include <stdexcept>
#include <string>

namespace holonomy {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two operands live in different groups.
class SpecMismatch : public Error {
 public:
  using Error::Error;
};

/// A precondition on an argument or configuration value failed.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A configuration value is malformed or unknown; field() names it.
class ConfigError : public InvalidArgument {
 public:
  ConfigError(std::string field, const std::string& what)
      : InvalidArgument("field '" + field + "': " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// A geometric precondition failed (edge leaves the chart, endpoints do not match, ...).
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// An enumeration would exceed its configured size budget.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// The mathematical hypothesis of a check does not hold for the given instance.
class HypothesisViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace holonomy
