#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace s5id {

enum class ErrorCode {
  InvalidArgument,
  NonFiniteInput,
  DimensionMismatch,
  NotPositiveDefinite,
  CommonEigenvalues,
  UnstableMatrix,
  UnstableModel,
  NotObservable,
  UnsupportedDimension,
  InsufficientSamples,
  RankDeficientRegressors,
  OrderTooLarge,
  SingularResolvent,
  ConvergenceFailure,
  ParseError,
  AttemptBudgetExhausted,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library. `stage()` names the pipeline stage
/// that failed when the error passed through an identification pipeline.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string stage = {});

  ErrorCode code() const noexcept { return code_; }
  const std::string& stage() const noexcept { return stage_; }
  const std::string& detail() const noexcept { return detail_; }

  /// Copy of this error tagged with a stage label (first tag wins).
  Error at_stage(const std::string& stage) const;

 private:
  ErrorCode code_;
  std::string stage_;
  std::string detail_;
};

}  // namespace s5id
