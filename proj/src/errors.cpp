#include "hoverid/errors.hpp"

namespace hoverid {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::GimbalProximity: return "GimbalProximity";
    case ErrorCode::BadSpec: return "BadSpec";
    case ErrorCode::BadShape: return "BadShape";
    case ErrorCode::InsufficientHistory: return "InsufficientHistory";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::LinearSolveFailure: return "LinearSolveFailure";
    case ErrorCode::NonFiniteResidual: return "NonFiniteResidual";
    case ErrorCode::MissingChannel: return "MissingChannel";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::DivergentRollout: return "DivergentRollout";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

bool is_numerical(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadConfig:
    case ErrorCode::Io:
    case ErrorCode::MissingChannel:
      return false;
    default:
      return true;
  }
}

}  // namespace hoverid
