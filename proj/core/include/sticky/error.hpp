#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sticky {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed caller input (bad symbol, empty sequence, broken block list).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A matrix would need more output lengths than the hard cap allows.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// A user-supplied matrix failed the row-stochastic check.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Input and output block structures disagree (block count or symbols).
class StructuralMismatch : public Error {
 public:
  using Error::Error;
};

/// An observation has probability zero under every candidate input length.
class ImpossibleObservation : public Error {
 public:
  using Error::Error;
};

/// Exact enumeration is too large and sampling was not allowed.
class ResourceError : public Error {
 public:
  using Error::Error;
};

/// An iterative search hit its cap without meeting the target.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// A block length exceeds what the channel matrix represents.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Text input could not be parsed; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace sticky
