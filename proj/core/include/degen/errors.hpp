#pragma once

#include <stdexcept>
#include <string>

namespace degen {

/// Base of every error raised by the library. `kind()` is the stable
/// machine-readable name used in CLI error JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define DEGEN_DEFINE_ERROR(Name)                                     \
  class Name : public Error {                                        \
   public:                                                           \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  }

DEGEN_DEFINE_ERROR(InvalidLevel);
DEGEN_DEFINE_ERROR(DomainError);
DEGEN_DEFINE_ERROR(ConfigError);
DEGEN_DEFINE_ERROR(ShapeError);
DEGEN_DEFINE_ERROR(IndexError);
DEGEN_DEFINE_ERROR(PolicyError);
DEGEN_DEFINE_ERROR(EmptyMask);
DEGEN_DEFINE_ERROR(EmptyBuffer);
DEGEN_DEFINE_ERROR(NoGoal);
DEGEN_DEFINE_ERROR(NonFiniteLoss);
DEGEN_DEFINE_ERROR(IoError);
DEGEN_DEFINE_ERROR(UsageError);

#undef DEGEN_DEFINE_ERROR

class ParseError : public Error {
 public:
  ParseError(const std::string& message, int line, int col)
      : Error("ParseError", "line " + std::to_string(line) + ", col " +
                                std::to_string(col) + ": " + message),
        line_(line),
        col_(col) {}
  int line() const noexcept { return line_; }
  int col() const noexcept { return col_; }

 private:
  int line_;
  int col_;
};

}  // namespace degen
