#include "fosense/error.hpp"

namespace fosense {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kInvalidInput: return "invalid-input";
    case ErrorKind::kMismatch: return "mismatch";
    case ErrorKind::kSymmetryViolation: return "symmetry-violation";
    case ErrorKind::kOutOfBand: return "out-of-band";
    case ErrorKind::kAliasingRisk: return "aliasing-risk";
    case ErrorKind::kPlanning: return "planning";
    case ErrorKind::kDivisionDegenerate: return "division-degenerate";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kOutOfRange: return "out-of-range";
    case ErrorKind::kUndetectable: return "undetectable";
    case ErrorKind::kCoverage: return "coverage";
    case ErrorKind::kIllConditioned: return "ill-conditioned";
    case ErrorKind::kNotPulseLike: return "not-pulse-like";
    case ErrorKind::kInsufficientData: return "insufficient-data";
    case ErrorKind::kSaturation: return "saturation";
  }
  return "unknown";
}

}  // namespace fosense
