#pragma once

#include <stdexcept>
#include <string>

namespace sonc {

enum class ErrorKind {
  DuplicateExponent,
  DimensionMismatch,
  NegativeExponentEntry,
  ExponentOverflow,
  InvalidArgument,
  LpNumericalFailure,
  MaxPivotsExceeded,
  NotAffinelyIndependent,
  InnerNotInteriorPoint,
  OddOuterExponent,
  SupportTooLargeForEnumeration,
  PointNotInterior,
  StartNotFeasible,
  IterationLimit,
  NumericalFailure,
  NotConverged,
  CircuitNotOnSupport,
  PolishFailed,
  NotEnoughInteriorMonomials,
  ParseError,
  IoError,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DuplicateExponent: return "DuplicateExponent";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NegativeExponentEntry: return "NegativeExponentEntry";
    case ErrorKind::ExponentOverflow: return "ExponentOverflow";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::LpNumericalFailure: return "LpNumericalFailure";
    case ErrorKind::MaxPivotsExceeded: return "MaxPivotsExceeded";
    case ErrorKind::NotAffinelyIndependent: return "NotAffinelyIndependent";
    case ErrorKind::InnerNotInteriorPoint: return "InnerNotInteriorPoint";
    case ErrorKind::OddOuterExponent: return "OddOuterExponent";
    case ErrorKind::SupportTooLargeForEnumeration: return "SupportTooLargeForEnumeration";
    case ErrorKind::PointNotInterior: return "PointNotInterior";
    case ErrorKind::StartNotFeasible: return "StartNotFeasible";
    case ErrorKind::IterationLimit: return "IterationLimit";
    case ErrorKind::NumericalFailure: return "NumericalFailure";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::CircuitNotOnSupport: return "CircuitNotOnSupport";
    case ErrorKind::PolishFailed: return "PolishFailed";
    case ErrorKind::NotEnoughInteriorMonomials: return "NotEnoughInteriorMonomials";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

/// Exception carrying a machine-checkable kind next to the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace sonc
