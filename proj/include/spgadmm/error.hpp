#pragma once

#include <stdexcept>
#include <string>

namespace spgadmm {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand block structure does not conform.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A quadratic form that should be nonnegative came out clearly negative.
class PsdViolation : public Error {
 public:
  using Error::Error;
};

// Argument outside the domain of a function (box violation, rho outside (0,2)).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Solver configuration or proximal-term pair fails a hypothesis.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Block-diagonal part could not be factored.
class DecompositionError : public Error {
 public:
  using Error::Error;
};

// Malformed instance file or trace.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that violates an invariant. field() names the offender.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& what)
      : Error("field '" + field + "': " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Not enough trace data for a rate fit.
class InsufficientData : public Error {
 public:
  using Error::Error;
};

}  // namespace spgadmm
