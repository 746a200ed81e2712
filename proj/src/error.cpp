#include "fwm/error.hpp"

namespace fwm {

std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kGridTooShort: return "grid-too-short";
    case ErrorCode::kLengthMismatch: return "length-mismatch";
    case ErrorCode::kGridMismatch: return "grid-mismatch";
    case ErrorCode::kZeroTauR: return "zero-tau-r";
    case ErrorCode::kNoSideband: return "no-sideband";
    case ErrorCode::kWindowOverlapsDc: return "window-overlaps-dc";
    case ErrorCode::kAllBelowThreshold: return "all-below-threshold";
    case ErrorCode::kInsufficientSupport: return "insufficient-support";
    case ErrorCode::kRankDeficient: return "rank-deficiency";
    case ErrorCode::kEmptyInput: return "empty-input";
    case ErrorCode::kStepTooLarge: return "step-too-large";
    case ErrorCode::kInvariantViolation: return "invariant-violation";
    case ErrorCode::kRichardsonFailure: return "richardson-failure";
    case ErrorCode::kInvalidConfig: return "invalid-config";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kParse: return "parse";
  }
  return "unknown";
}

bool is_usage_error(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidConfig:
    case ErrorCode::kIo:
    case ErrorCode::kParse:
    case ErrorCode::kInvalidArgument:
      return true;
    default:
      return false;
  }
}

}  // namespace fwm
