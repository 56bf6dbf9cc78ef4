#include "aqp/error.hpp"

namespace aqp {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NullValue: return "NullValue";
    case ErrorCode::WrongKind: return "WrongKind";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::UnknownAttribute: return "UnknownAttribute";
    case ErrorCode::InvalidTemplate: return "InvalidTemplate";
    case ErrorCode::InvalidTarget: return "InvalidTarget";
    case ErrorCode::EmptyCombos: return "EmptyCombos";
    case ErrorCode::EmptyFilterSet: return "EmptyFilterSet";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::TooFewQueries: return "TooFewQueries";
    case ErrorCode::EmptyAggregate: return "EmptyAggregate";
    case ErrorCode::Unsupported: return "Unsupported";
    case ErrorCode::UnknownToken: return "UnknownToken";
    case ErrorCode::NumericOverflow: return "NumericOverflow";
    case ErrorCode::MalformedMatrix: return "MalformedMatrix";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::VocabularyMismatch: return "VocabularyMismatch";
    case ErrorCode::DegenerateRange: return "DegenerateRange";
    case ErrorCode::EmptyList: return "EmptyList";
    case ErrorCode::Io: return "Io";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ArtifactMismatch: return "ArtifactMismatch";
  }
  return "Unknown";
}

bool is_validation_error(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DivergedLoss:
    case ErrorCode::Io:
    case ErrorCode::Unsupported:
      return false;
    default:
      return true;
  }
}

}  // namespace aqp
