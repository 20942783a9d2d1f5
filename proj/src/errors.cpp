#include "sklab/errors.hpp"

namespace sklab {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonpositiveFriction: return "NonpositiveFriction";
    case ErrorCode::BadGenerator: return "BadGenerator";
    case ErrorCode::BadCorrelation: return "BadCorrelation";
    case ErrorCode::BadTransition: return "BadTransition";
    case ErrorCode::LipschitzViolation: return "LipschitzViolation";
    case ErrorCode::SigmaBoundViolation: return "SigmaBoundViolation";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::BadInterval: return "BadInterval";
    case ErrorCode::ValidationFailed: return "ValidationFailed";
    case ErrorCode::IntensityExceedsZeta: return "IntensityExceedsZeta";
    case ErrorCode::BlowUp: return "BlowUp";
    case ErrorCode::Reducible: return "Reducible";
    case ErrorCode::UnsupportedEnvironment: return "UnsupportedEnvironment";
    case ErrorCode::StepTooCoarse: return "StepTooCoarse";
    case ErrorCode::BadScheme: return "BadScheme";
    case ErrorCode::MissingDiagnostics: return "MissingDiagnostics";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::BoundaryHit: return "BoundaryHit";
    case ErrorCode::NonscalarModel: return "NonscalarModel";
    case ErrorCode::NegativeControl: return "NegativeControl";
    case ErrorCode::MaxIterations: return "MaxIterations";
    case ErrorCode::BadLadder: return "BadLadder";
    case ErrorCode::BadEvent: return "BadEvent";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnknownKey: return "UnknownKey";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::UnknownPreset: return "UnknownPreset";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace sklab
