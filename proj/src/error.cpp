#include "xckit/error.hpp"

namespace xckit {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kUnknownLayerKind: return "UnknownLayerKind";
    case ErrorCode::kTargetOutOfRange: return "TargetOutOfRange";
    case ErrorCode::kEmptyBatch: return "EmptyBatch";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kZeroSteps: return "ZeroSteps";
    case ErrorCode::kNegativeMargin: return "NegativeMargin";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kEmptyClassThresholds: return "EmptyClassThresholds";
    case ErrorCode::kUnknownLabel: return "UnknownLabel";
    case ErrorCode::kDegenerateClassBalance: return "DegenerateClassBalance";
    case ErrorCode::kNoPositives: return "NoPositives";
    case ErrorCode::kEmptySample: return "EmptySample";
    case ErrorCode::kConstantFeature: return "ConstantFeature";
    case ErrorCode::kSingleClassTrainingSet: return "SingleClassTrainingSet";
    case ErrorCode::kInsufficientRows: return "InsufficientRows";
    case ErrorCode::kMissingAttribution: return "MissingAttribution";
    case ErrorCode::kPlacementFailure: return "PlacementFailure";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kVersionUnsupported: return "VersionUnsupported";
    case ErrorCode::kTruncatedPayload: return "TruncatedPayload";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kIo: return "IoError";
  }
  return "Unknown";
}

}  // namespace xckit
