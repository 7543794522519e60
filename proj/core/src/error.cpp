#include "latalign/error.hpp"

namespace latalign {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SingleTrialContext: return "SingleTrialContext";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::ModeMismatch: return "ModeMismatch";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NotTrained: return "NotTrained";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::InvalidBand: return "InvalidBand";
    case ErrorCode::NoEvents: return "NoEvents";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::TruncatedRecord: return "TruncatedRecord";
    case ErrorCode::MissingSubjects: return "MissingSubjects";
    case ErrorCode::UnknownStageCode: return "UnknownStageCode";
    case ErrorCode::Io: return "Io";
    case ErrorCode::IncompatibleShape: return "IncompatibleShape";
    case ErrorCode::TooFewSubjects: return "TooFewSubjects";
    case ErrorCode::InsufficientTrials: return "InsufficientTrials";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::MissingClass: return "MissingClass";
    case ErrorCode::IncompleteGrid: return "IncompleteGrid";
    case ErrorCode::DegenerateSpectrum: return "DegenerateSpectrum";
    case ErrorCode::UnknownMontage: return "UnknownMontage";
    case ErrorCode::UnknownElectrode: return "UnknownElectrode";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
  }
  return "Unknown";
}

ErrorCategory category_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigInvalid:
    case ErrorCode::InvalidArgument:
      return ErrorCategory::Config;
    case ErrorCode::DivergedLoss:
    case ErrorCode::SingularCovariance:
    case ErrorCode::DegenerateSpectrum:
    case ErrorCode::NotTrained:
    case ErrorCode::ModeMismatch:
      return ErrorCategory::Runtime;
    default:
      return ErrorCategory::Data;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace latalign

#include <iostream>
#include <mutex>

#include "latalign/log.hpp"

namespace latalign {
namespace {
std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}
LogSink& sink() {
  static LogSink s = [](const std::string& line) { std::cerr << line << '\n'; };
  return s;
}
}  // namespace

void set_log_sink(LogSink s) {
  std::lock_guard lock(sink_mutex());
  sink() = s ? std::move(s) : [](const std::string&) {};
}

void log_info(const std::string& message) {
  std::lock_guard lock(sink_mutex());
  sink()(message);
}

void log_warning(const std::string& message) {
  std::lock_guard lock(sink_mutex());
  sink()("warning: " + message);
}

}  // namespace latalign
