#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ldg {

enum class ErrorCode {
  ZeroTensor,
  InvalidFrame,
  NonPositiveCoefficient,
  HypothesisViolated,
  NonUnitVector,
  ProjectionUndefined,
  TooFarFromManifold,
  SamplingTooCoarse,
  DomainTooThin,
  InvalidSpec,
  OutOfDomain,
  NonFiniteEncountered,
  EpsilonTooLarge,
  CircleOutsideDomain,
  CircleMeetsDefect,
  BallOutsideDomain,
  ConfigInvalid,
  DumpCorrupt,
  VersionMismatch,
  IoFailure,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ZeroTensor: return "ZeroTensor";
    case ErrorCode::InvalidFrame: return "InvalidFrame";
    case ErrorCode::NonPositiveCoefficient: return "NonPositiveCoefficient";
    case ErrorCode::HypothesisViolated: return "HypothesisViolated";
    case ErrorCode::NonUnitVector: return "NonUnitVector";
    case ErrorCode::ProjectionUndefined: return "ProjectionUndefined";
    case ErrorCode::TooFarFromManifold: return "TooFarFromManifold";
    case ErrorCode::SamplingTooCoarse: return "SamplingTooCoarse";
    case ErrorCode::DomainTooThin: return "DomainTooThin";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::NonFiniteEncountered: return "NonFiniteEncountered";
    case ErrorCode::EpsilonTooLarge: return "EpsilonTooLarge";
    case ErrorCode::CircleOutsideDomain: return "CircleOutsideDomain";
    case ErrorCode::CircleMeetsDefect: return "CircleMeetsDefect";
    case ErrorCode::BallOutsideDomain: return "BallOutsideDomain";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::DumpCorrupt: return "DumpCorrupt";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ldg
