#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sgw {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  /// Short machine-readable category, e.g. "ParseError".
  virtual const char* kind() const noexcept { return "Error"; }
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  const char* kind() const noexcept override { return "ParseError"; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

#define SGW_DECLARE_ERROR(Name)                                    \
  class Name : public Error {                                      \
   public:                                                         \
    using Error::Error;                                            \
    const char* kind() const noexcept override { return #Name; }   \
  };

SGW_DECLARE_ERROR(ValidationError)
SGW_DECLARE_ERROR(InvalidParam)
SGW_DECLARE_ERROR(DimensionMismatch)
SGW_DECLARE_ERROR(NumericalError)
SGW_DECLARE_ERROR(DegenerateMass)
SGW_DECLARE_ERROR(SingularScatter)
SGW_DECLARE_ERROR(GroupCountError)
SGW_DECLARE_ERROR(IoError)

#undef SGW_DECLARE_ERROR

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what + " (attained residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  const char* kind() const noexcept override { return "ConvergenceError"; }
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// True for errors caused by bad input (usage, parsing, validation) as opposed
/// to numerical breakdown.
inline bool is_input_error(const Error& e) noexcept {
  return dynamic_cast<const ParseError*>(&e) || dynamic_cast<const ValidationError*>(&e) ||
         dynamic_cast<const InvalidParam*>(&e) || dynamic_cast<const DimensionMismatch*>(&e) ||
         dynamic_cast<const GroupCountError*>(&e) || dynamic_cast<const IoError*>(&e);
}

}  // namespace sgw
