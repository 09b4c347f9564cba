#ifndef RANGEFUSE_ERRORS_HPP
#define RANGEFUSE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace rangefuse {

/// Argument outside the mathematical domain of an operation (d <= 0, etc.).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The requested distribution or model is degenerate (zero spread, f(d) = 0, ...).
class DegenerateError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Invalid user-supplied configuration. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file; carries the 1-based line number.
class ParseError : public ConfigError {
 public:
  ParseError(const std::string& what, int line)
      : ConfigError("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Numerical failure (non-convergent quadrature, broken model). Maps to CLI exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ModelError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace rangefuse

#endif  // RANGEFUSE_ERRORS_HPP
