#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kfss {

enum class ErrorCode {
  kNonFinite,
  kDimensionMismatch,
  kUnstable,
  kNoConvergence,
  kInfeasible,
  kSingularCovariance,
  kSingularUpdate,
  kNotRankOne,
  kNotPositiveDefiniteW,
  kNotPositiveDefiniteV,
  kUndetectable,
  kUnstabilizable,
  kCorrelatedNoise,
  kInvalidSelection,
  kBudgetExceedsSensors,
  kTooManySubsets,
  kInvalidConfig,
  kParse,
  kCampaignFailed,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct Violation {
  ErrorCode code;
  std::string message;
};

// Raised by build_model; carries every violated invariant, not just the first.
class ModelValidationError : public Error {
 public:
  explicit ModelValidationError(std::vector<Violation> violations);

  const std::vector<Violation>& violations() const noexcept {
    return violations_;
  }

 private:
  std::vector<Violation> violations_;
};

}  // namespace kfss
