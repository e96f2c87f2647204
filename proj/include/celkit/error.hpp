#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace celkit {

enum class ErrorKind {
  NotHermitian,
  NotUnitary,
  ConvergenceFailure,
  BranchCutHit,
  InvalidGrid,
  AliasedPath,
  BoundViolated,
  EndpointMismatch,
  AliasedPhase,
  LogUndefined,
  StartNotInSpectrum,
  PerturbationFailed,
  NonIntegerSum,
  DuplicateEntries,
  NotDetOne,
  GridTooCoarse,
  GapViolated,
  RankNotOne,
  BandLost,
  NoConsistentL,
  RegimeUnresolved,
  InvalidDefect,
  InsufficientMultiplicity,
  InvalidParams,
  SchemaError,
  IoError,
};

inline std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::NotHermitian: return "NotHermitian";
    case ErrorKind::NotUnitary: return "NotUnitary";
    case ErrorKind::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorKind::BranchCutHit: return "BranchCutHit";
    case ErrorKind::InvalidGrid: return "InvalidGrid";
    case ErrorKind::AliasedPath: return "AliasedPath";
    case ErrorKind::BoundViolated: return "BoundViolated";
    case ErrorKind::EndpointMismatch: return "EndpointMismatch";
    case ErrorKind::AliasedPhase: return "AliasedPhase";
    case ErrorKind::LogUndefined: return "LogUndefined";
    case ErrorKind::StartNotInSpectrum: return "StartNotInSpectrum";
    case ErrorKind::PerturbationFailed: return "PerturbationFailed";
    case ErrorKind::NonIntegerSum: return "NonIntegerSum";
    case ErrorKind::DuplicateEntries: return "DuplicateEntries";
    case ErrorKind::NotDetOne: return "NotDetOne";
    case ErrorKind::GridTooCoarse: return "GridTooCoarse";
    case ErrorKind::GapViolated: return "GapViolated";
    case ErrorKind::RankNotOne: return "RankNotOne";
    case ErrorKind::BandLost: return "BandLost";
    case ErrorKind::NoConsistentL: return "NoConsistentL";
    case ErrorKind::RegimeUnresolved: return "RegimeUnresolved";
    case ErrorKind::InvalidDefect: return "InvalidDefect";
    case ErrorKind::InsufficientMultiplicity: return "InsufficientMultiplicity";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure in the library is reported through this exception; `kind()`
/// is the machine-readable part, `what()` carries the context.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(std::string(to_string(kind)) + ": " + msg), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace celkit
