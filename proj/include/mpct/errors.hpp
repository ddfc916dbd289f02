#pragma once

#include <stdexcept>
#include <string>

namespace mpct {

enum class ErrorCode {
  DimensionMismatch,
  NotPositiveDefinite,
  SingularCapacitance,
  HorizonTooShort,
  InvalidBounds,
  NonpositiveScaling,
  RankDeficient,
  RiccatiNoStabilizingSolution,
  InvalidTemperature,
  NonFiniteState,
  NotAnEquilibrium,
  NoSteadyStateFound,
  InvalidParameters,
  EmptyTrajectory,
  OutOfRange,
  PlanInvalid,
  ConfigError,
};

const char* to_string(ErrorCode code);

/// Library-wide exception. `index()` carries the offending block/step/field
/// position where one exists, otherwise -1.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, long index = -1)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code),
        index_(index) {}

  ErrorCode code() const noexcept { return code_; }
  long index() const noexcept { return index_; }

 private:
  ErrorCode code_;
  long index_;
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::SingularCapacitance: return "SingularCapacitance";
    case ErrorCode::HorizonTooShort: return "HorizonTooShort";
    case ErrorCode::InvalidBounds: return "InvalidBounds";
    case ErrorCode::NonpositiveScaling: return "NonpositiveScaling";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::RiccatiNoStabilizingSolution: return "RiccatiNoStabilizingSolution";
    case ErrorCode::InvalidTemperature: return "InvalidTemperature";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::NotAnEquilibrium: return "NotAnEquilibrium";
    case ErrorCode::NoSteadyStateFound: return "NoSteadyStateFound";
    case ErrorCode::InvalidParameters: return "InvalidParameters";
    case ErrorCode::EmptyTrajectory: return "EmptyTrajectory";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::PlanInvalid: return "PlanInvalid";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace mpct
