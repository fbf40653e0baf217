#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace uos {

enum class ErrorCode {
  RankDeficient,
  DimensionMismatch,
  NotOrthogonal,
  InsufficientAmbientDim,
  NotSymmetric,
  NotPositiveDefinite,
  NearSingular,
  TooFewSamples,
  DivisionByZero,
  RegimeMismatch,
  DomainError,
  DegenerateJoint,
  ConvergenceError,
  TooFewTrials,
  ConfigError,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotOrthogonal: return "NotOrthogonal";
    case ErrorCode::InsufficientAmbientDim: return "InsufficientAmbientDim";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::NearSingular: return "NearSingular";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::DivisionByZero: return "DivisionByZero";
    case ErrorCode::RegimeMismatch: return "RegimeMismatch";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::DegenerateJoint: return "DegenerateJoint";
    case ErrorCode::ConvergenceError: return "ConvergenceError";
    case ErrorCode::TooFewTrials: return "TooFewTrials";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit-code mapping) can branch without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace uos
