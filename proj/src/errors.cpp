#include "denoise/errors.hpp"

namespace denoise {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NotAPermutation: return "NotAPermutation";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::EmptyGraph: return "EmptyGraph";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::DanglingNodeId: return "DanglingNodeId";
    case ErrorCode::InconsistentCounts: return "InconsistentCounts";
    case ErrorCode::Io: return "Io";
    case ErrorCode::CheckpointFormat: return "CheckpointFormat";
    case ErrorCode::NonFiniteResult: return "NonFiniteResult";
    case ErrorCode::NotScalar: return "NotScalar";
    case ErrorCode::DetachedLoss: return "DetachedLoss";
    case ErrorCode::MissingGradient: return "MissingGradient";
    case ErrorCode::NonBinaryAdjacency: return "NonBinaryAdjacency";
    case ErrorCode::EmptyAnchorSet: return "EmptyAnchorSet";
    case ErrorCode::TooFewGraphs: return "TooFewGraphs";
    case ErrorCode::EmptyVector: return "EmptyVector";
    case ErrorCode::NoNormalGraphs: return "NoNormalGraphs";
    case ErrorCode::EmptyBank: return "EmptyBank";
    case ErrorCode::DegeneratePools: return "DegeneratePools";
    case ErrorCode::TooFewVectors: return "TooFewVectors";
    case ErrorCode::UnfittedHead: return "UnfittedHead";
    case ErrorCode::SingleClassDataset: return "SingleClassDataset";
    case ErrorCode::PoolExhausted: return "PoolExhausted";
    case ErrorCode::SingleClassLabels: return "SingleClassLabels";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::InvalidDataset: return "InvalidDataset";
  }
  return "Unknown";
}

ErrorCategory category(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::EmptyGrid:
      return ErrorCategory::Config;
    case ErrorCode::NonFiniteResult:
    case ErrorCode::NotScalar:
    case ErrorCode::DetachedLoss:
    case ErrorCode::MissingGradient:
    case ErrorCode::ShapeMismatch:
      return ErrorCategory::Numeric;
    default:
      return ErrorCategory::Data;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace denoise
