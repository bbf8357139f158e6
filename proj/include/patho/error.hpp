#pragma once

#include <stdexcept>
#include <string>

namespace patho {

/// Base of every error the toolkit raises. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (JSON syntax, wrong value types). Carries a 1-based line when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A record or file that parsed but violates a documented invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A detector was asked to score a record that lacks one of its required fields.
class UnavailableError : public Error {
 public:
  using Error::Error;
};

/// A corpus-level detector received a single record, or similar shape mismatch.
class ArityError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation (zero vector, ||y|| >= 1, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// Iterative method stopped without meeting its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace patho
