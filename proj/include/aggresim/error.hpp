#pragma once

#include <stdexcept>
#include <string>

namespace aggresim {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input to an operation (precondition violated by the caller).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Physically inadmissible state: J <= 0, density outside (0, 1/(pi R^2)), ...
/// The time stepper treats it as a step rejection.
class InadmissibleState : public Error {
 public:
  using Error::Error;
};

/// Local or global iteration failed to converge.
class ConvergenceFailure : public Error {
 public:
  using Error::Error;
};

/// Singular or numerically near-singular linear system.
class SingularSystem : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace aggresim
