#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace latalign {

enum class ErrorCode {
  // alignment
  SingleTrialContext,
  NonFiniteInput,
  ModeMismatch,
  SingularCovariance,
  ShapeMismatch,
  NotTrained,
  // signal preparation
  TooShort,
  InvalidBand,
  NoEvents,
  // data ingestion
  MalformedHeader,
  TruncatedRecord,
  MissingSubjects,
  UnknownStageCode,
  Io,
  // models and training
  IncompatibleShape,
  TooFewSubjects,
  InsufficientTrials,
  DivergedLoss,
  // analysis
  MissingClass,
  IncompleteGrid,
  DegenerateSpectrum,
  UnknownMontage,
  UnknownElectrode,
  // configuration
  InvalidArgument,
  ConfigInvalid,
};

std::string_view to_string(ErrorCode code);

/// Coarse grouping used to map failures onto process exit codes.
enum class ErrorCategory { Config, Data, Runtime };

ErrorCategory category_of(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace latalign
