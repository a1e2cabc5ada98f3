#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace epg {

enum class ErrorCode {
  InvalidArgument,
  NonMonotoneBeta,
  NonMonotoneCost,
  BetaOneNotAboveSigma,
  InvalidEpidemicParams,
  NotOnSimplex,
  BudgetOutOfRange,
  Assumption1Violated,
  InvalidRho,
  NonPositiveInfectious,
  StepSizeUnderflow,
  InvariantBreach,
  NSViolation,
  DissipationViolation,
  PreconditionViolated,
  TargetBelowFloor,
  ParseError,
  IoError,
};

/// Stable identifier for an error code, e.g. "BudgetOutOfRange".
std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace epg
