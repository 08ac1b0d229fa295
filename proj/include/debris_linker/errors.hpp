#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace debris_linker {

enum class ErrorKind {
  InvalidInput,
  ParseError,
  PolarSingularity,
  HyperbolicOrbit,
  DegenerateAngularMomentum,
  NonConvergence,
  BelowHorizon,
  TooFewObservations,
  NegativeEtaSquared,
  InfeasibleGeometry,
  AmbiguousRegion,
  SingularGeometry,
  NoRealRoot,
  DegenerateQuadratic,
  NoConvergence,
  JacobianSingular,
  NoBranch,
  DegenerateTimes,
  CollinearPositions,
  InfeasibleCorrection,
  ParallelToNormal,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::PolarSingularity: return "PolarSingularity";
    case ErrorKind::HyperbolicOrbit: return "HyperbolicOrbit";
    case ErrorKind::DegenerateAngularMomentum: return "DegenerateAngularMomentum";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::BelowHorizon: return "BelowHorizon";
    case ErrorKind::TooFewObservations: return "TooFewObservations";
    case ErrorKind::NegativeEtaSquared: return "NegativeEtaSquared";
    case ErrorKind::InfeasibleGeometry: return "InfeasibleGeometry";
    case ErrorKind::AmbiguousRegion: return "AmbiguousRegion";
    case ErrorKind::SingularGeometry: return "SingularGeometry";
    case ErrorKind::NoRealRoot: return "NoRealRoot";
    case ErrorKind::DegenerateQuadratic: return "DegenerateQuadratic";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::JacobianSingular: return "JacobianSingular";
    case ErrorKind::NoBranch: return "NoBranch";
    case ErrorKind::DegenerateTimes: return "DegenerateTimes";
    case ErrorKind::CollinearPositions: return "CollinearPositions";
    case ErrorKind::InfeasibleCorrection: return "InfeasibleCorrection";
    case ErrorKind::ParallelToNormal: return "ParallelToNormal";
  }
  return "Unknown";
}

/// Library-wide exception; `kind()` identifies the failure class so callers
/// (the Monte Carlo harness in particular) can tally failures per class.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace debris_linker
