#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sklab {

enum class ErrorCode {
  // model-core
  NonpositiveFriction,
  BadGenerator,
  BadCorrelation,
  BadTransition,
  LipschitzViolation,
  SigmaBoundViolation,
  DimensionMismatch,
  BadInterval,
  ValidationFailed,
  // env-sim
  IntensityExceedsZeta,
  BlowUp,
  Reducible,
  UnsupportedEnvironment,
  // integrator / reduction
  StepTooCoarse,
  BadScheme,
  MissingDiagnostics,
  GridMismatch,
  // rate function
  NoConvergence,
  BoundaryHit,
  NonscalarModel,
  NegativeControl,
  MaxIterations,
  // lab
  BadLadder,
  BadEvent,
  // config / cli
  ParseError,
  UnknownKey,
  MissingField,
  UnknownPreset,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Library-wide exception. Every failure that a caller may want to
/// distinguish carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sklab
