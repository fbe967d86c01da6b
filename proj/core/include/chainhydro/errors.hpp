#pragma once

#include <stdexcept>
#include <string>

namespace chainhydro {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class NonConvergedQuadrature : public Error {
public:
  using Error::Error;
};

class OutOfRange : public Error {
public:
  using Error::Error;
};

class EnvelopeFailure : public Error {
public:
  using Error::Error;
};

// Non-finite or runaway state in the particle integrator or the macro solver.
class BlowUp : public Error {
public:
  using Error::Error;
};

class IndexOutOfRange : public Error {
public:
  using Error::Error;
};

// A test function does not satisfy its boundary constraint.
class ConstraintViolation : public Error {
public:
  using Error::Error;
};

// An entropy/flux pair fails the Lax compatibility relations.
class PairInvalid : public Error {
public:
  using Error::Error;
};

// Carries the offending config key so the CLI can point at it.
class ConfigInvalid : public Error {
public:
  ConfigInvalid(std::string field, const std::string& message)
      : Error(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const { return field_; }

private:
  std::string field_;
};

} // namespace chainhydro
