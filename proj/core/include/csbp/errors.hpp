#pragma once

#include <stdexcept>
#include <string>

namespace csbp {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  /// Stable machine-readable tag, emitted in CLI error JSON.
  virtual const char* kind() const noexcept { return "Error"; }
};

#define CSBP_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                     \
   public:                                                        \
    using Error::Error;                                           \
    const char* kind() const noexcept override { return #Name; }  \
  }

CSBP_DEFINE_ERROR(IrreducibilityError);
CSBP_DEFINE_ERROR(ConvergenceError);
CSBP_DEFINE_ERROR(StepError);
CSBP_DEFINE_ERROR(NoConvergence);
CSBP_DEFINE_ERROR(QuadratureError);
CSBP_DEFINE_ERROR(ConfigError);
CSBP_DEFINE_ERROR(DegenerateError);
CSBP_DEFINE_ERROR(SchemaError);
CSBP_DEFINE_ERROR(DomainError);

#undef CSBP_DEFINE_ERROR

/// Syntax error in a configuration file. Line and column are 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, int line, int column)
      : Error("line " + std::to_string(line) + ", column " +
              std::to_string(column) + ": " + msg),
        line_(line),
        column_(column) {}
  const char* kind() const noexcept override { return "ParseError"; }
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace csbp
