#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fosense {

// Failure categories. The CLI maps each one to a distinct exit code.
enum class ErrorKind {
  kInvalidInput,
  kMismatch,
  kSymmetryViolation,
  kOutOfBand,
  kAliasingRisk,
  kPlanning,
  kDivisionDegenerate,
  kIo,
  kOutOfRange,
  kUndetectable,
  kCoverage,
  kIllConditioned,
  kNotPulseLike,
  kInsufficientData,
  kSaturation,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace fosense
