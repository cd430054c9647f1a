#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kgm {

enum class ErrorCode {
  InvalidArgument,
  NonFiniteInput,
  BoundsViolated,
  ZeroField,
  AlphaOutOfRange,
  NoAlpha,
  CollapseToZero,
  ProjectionFailed,
  BoundednessMonitorTripped,
  UniformBoundViolated,
  MassLeak,
  BisectionStalled,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::BoundsViolated: return "BoundsViolated";
    case ErrorCode::ZeroField: return "ZeroField";
    case ErrorCode::AlphaOutOfRange: return "AlphaOutOfRange";
    case ErrorCode::NoAlpha: return "NoAlpha";
    case ErrorCode::CollapseToZero: return "CollapseToZero";
    case ErrorCode::ProjectionFailed: return "ProjectionFailed";
    case ErrorCode::BoundednessMonitorTripped: return "BoundednessMonitorTripped";
    case ErrorCode::UniformBoundViolated: return "UniformBoundViolated";
    case ErrorCode::MassLeak: return "MassLeak";
    case ErrorCode::BisectionStalled: return "BisectionStalled";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

}  // namespace kgm
