#pragma once

#include <stdexcept>
#include <string>

namespace hublf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Instance data that cannot describe a valid problem (bad sizes, ranges).
class InvalidInstance : public Error {
 public:
  using Error::Error;
};

/// Malformed text input. `where` carries the line/field diagnostic.
class ParseError : public Error {
 public:
  ParseError(const std::string& where, const std::string& what)
      : Error(where + ": " + what), where_(where) {}
  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

/// Well-formed input that violates a semantic invariant (symmetry, ranges).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A model variant cannot be built for the given data.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// Solver output that breaks a design invariant.
class DecodeError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an API contract (e.g. a separator returned a satisfied row).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Brute-force enumeration refused because the instance is too large.
class OracleGuardError : public Error {
 public:
  using Error::Error;
};

}  // namespace hublf
