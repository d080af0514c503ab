#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace blendfit {

enum class ErrorCode {
  // stream ingest / output
  MalformedRecord,
  PointCountMismatch,
  NonMonotonicTimestamp,
  NonFiniteValue,
  WeightOutOfRange,
  SinkFailure,
  Io,
  // geometry
  DegenerateAnchors,
  CollinearAnchors,
  // features / transforms
  InsufficientSamples,
  IndexOutOfRange,
  InvalidArgument,
  DegenerateCovariance,
  LengthMismatch,
  DegenerateAnchorPair,
  DimensionMismatch,
  DomainViolation,
  // regression / statistics
  SingularDesign,
  NonConvergence,
  ZeroVariance,
  ZeroResiduals,
  SampleSizeOutOfRange,
  // pipeline / eval
  InsufficientTraining,
  AlignmentFailure,
  VersionMismatch,
  SchemaViolation,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries a stable code; stream readers
/// additionally attach the 1-based line number of the offending record.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> line = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> line_;
};

}  // namespace blendfit
