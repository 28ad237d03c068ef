#include "kfss/error.hpp"

namespace kfss {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kUnstable: return "Unstable";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kSingularCovariance: return "SingularCovariance";
    case ErrorCode::kSingularUpdate: return "SingularUpdate";
    case ErrorCode::kNotRankOne: return "NotRankOne";
    case ErrorCode::kNotPositiveDefiniteW: return "NotPositiveDefiniteW";
    case ErrorCode::kNotPositiveDefiniteV: return "NotPositiveDefiniteV";
    case ErrorCode::kUndetectable: return "Undetectable";
    case ErrorCode::kUnstabilizable: return "Unstabilizable";
    case ErrorCode::kCorrelatedNoise: return "CorrelatedNoise";
    case ErrorCode::kInvalidSelection: return "InvalidSelection";
    case ErrorCode::kBudgetExceedsSensors: return "BudgetExceedsSensors";
    case ErrorCode::kTooManySubsets: return "TooManySubsets";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kParse: return "Parse";
    case ErrorCode::kCampaignFailed: return "CampaignFailed";
  }
  return "Unknown";
}

namespace {

std::string join_violations(const std::vector<Violation>& violations) {
  std::string out = "invalid system model:";
  for (const auto& v : violations) {
    out += "\n  [";
    out += to_string(v.code);
    out += "] ";
    out += v.message;
  }
  return out;
}

}  // namespace

ModelValidationError::ModelValidationError(std::vector<Violation> violations)
    : Error(violations.empty() ? ErrorCode::kInfeasible : violations.front().code,
            join_violations(violations)),
      violations_(std::move(violations)) {}

}  // namespace kfss
