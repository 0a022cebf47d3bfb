#include "pjmp/error.hpp"

namespace pjmp {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveDelta: return "NonPositiveDelta";
    case ErrorCode::IntensityBelowLinearBound: return "IntensityBelowLinearBound";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::NonzeroDiagonal: return "NonzeroDiagonal";
    case ErrorCode::NonPositiveCeiling: return "NonPositiveCeiling";
    case ErrorCode::InvalidIntensity: return "InvalidIntensity";
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::InvalidState: return "InvalidState";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::ObservableUndefined: return "ObservableUndefined";
    case ErrorCode::StateSpaceTooLarge: return "StateSpaceTooLarge";
    case ErrorCode::MultipleClosedClasses: return "MultipleClosedClasses";
    case ErrorCode::NonFiniteTime: return "NonFiniteTime";
    case ErrorCode::InvalidTolerance: return "InvalidTolerance";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NonPositiveProbability: return "NonPositiveProbability";
    case ErrorCode::NotInRecurrentDomain: return "NotInRecurrentDomain";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace pjmp
