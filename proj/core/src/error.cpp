#include "s5id/error.hpp"

namespace s5id {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::CommonEigenvalues: return "CommonEigenvalues";
    case ErrorCode::UnstableMatrix: return "UnstableMatrix";
    case ErrorCode::UnstableModel: return "UnstableModel";
    case ErrorCode::NotObservable: return "NotObservable";
    case ErrorCode::UnsupportedDimension: return "UnsupportedDimension";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::RankDeficientRegressors: return "RankDeficientRegressors";
    case ErrorCode::OrderTooLarge: return "OrderTooLarge";
    case ErrorCode::SingularResolvent: return "SingularResolvent";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::AttemptBudgetExhausted: return "AttemptBudgetExhausted";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

namespace {

std::string compose(ErrorCode code, const std::string& message, const std::string& stage) {
  std::string out(to_string(code));
  if (!stage.empty()) out += " [" + stage + "]";
  if (!message.empty()) out += ": " + message;
  return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message, std::string stage)
    : std::runtime_error(compose(code, message, stage)),
      code_(code),
      stage_(std::move(stage)),
      detail_(message) {}

Error Error::at_stage(const std::string& stage) const {
  if (!stage_.empty()) return *this;
  return Error(code_, detail_, stage);
}

}  // namespace s5id
