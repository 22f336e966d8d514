#pragma once

#include <stdexcept>
#include <string>

namespace dynsparse {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Arguments or parameters outside the region where an operation is defined.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An algorithm failed to converge or hit an ill-conditioned system.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file; carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, long line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
        line_(line) {}

  long line() const { return line_; }

 private:
  long line_;
};

/// Output files disagree with their run manifest.
class VerificationError : public Error {
 public:
  using Error::Error;
};

/// Invalid command line or configuration.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace dynsparse
