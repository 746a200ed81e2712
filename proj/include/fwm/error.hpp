#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fwm {

enum class ErrorCode {
  kInvalidArgument,
  kGridTooShort,
  kLengthMismatch,
  kGridMismatch,
  kZeroTauR,
  kNoSideband,
  kWindowOverlapsDc,
  kAllBelowThreshold,
  kInsufficientSupport,
  kRankDeficient,
  kEmptyInput,
  kStepTooLarge,
  kInvariantViolation,
  kRichardsonFailure,
  kInvalidConfig,
  kIo,
  kParse,
};

std::string_view error_name(ErrorCode code) noexcept;

/// Usage/config problems map to exit code 2, everything else is a
/// computational failure (exit code 1).
bool is_usage_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string module, const std::string& what)
      : std::runtime_error(what), code_(code), module_(std::move(module)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& module() const noexcept { return module_; }

 private:
  ErrorCode code_;
  std::string module_;
};

}  // namespace fwm
