#pragma once

#include <stdexcept>
#include <string>

namespace denoise {

enum class ErrorCode {
  // graph model
  IndexOutOfRange,
  SelfLoop,
  ShapeMismatch,
  NotAPermutation,
  InvalidConfig,
  EmptyGraph,
  // parsing / IO
  MissingFile,
  MalformedLine,
  DanglingNodeId,
  InconsistentCounts,
  Io,
  CheckpointFormat,
  // numerics
  NonFiniteResult,
  NotScalar,
  DetachedLoss,
  MissingGradient,
  NonBinaryAdjacency,
  // algorithm
  EmptyAnchorSet,
  TooFewGraphs,
  EmptyVector,
  NoNormalGraphs,
  EmptyBank,
  DegeneratePools,
  TooFewVectors,
  UnfittedHead,
  // harness
  SingleClassDataset,
  PoolExhausted,
  SingleClassLabels,
  EmptyGrid,
  InvalidDataset,
};

/// Coarse grouping used to map failures onto CLI exit codes.
enum class ErrorCategory { Config, Data, Numeric };

const char* to_string(ErrorCode code);
ErrorCategory category(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace denoise
