#pragma once

#include <stdexcept>
#include <string>

namespace kam {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  Aliasing,
  Resonance,
  NonZeroAverage,
  Certificate,
  NonConvergence,
  Divergence,
  Undersampled,
  SingularJacobian,
  TwistDegenerate,
  Config,
  PropertyFailure,
  Io,
};

const char* to_string(ErrorCode code);

/// Anticipated failure of a numerical stage. `stage` names the operation
/// that raised it so reports can be machine-read.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string stage, const std::string& message)
      : std::runtime_error(message), code_(code), stage_(std::move(stage)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& stage() const noexcept { return stage_; }

 private:
  ErrorCode code_;
  std::string stage_;
};

inline void require(bool condition, ErrorCode code, const char* stage,
                    const std::string& message) {
  if (!condition) throw Error(code, stage, message);
}

}  // namespace kam
