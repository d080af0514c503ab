#include "blendfit/error.hpp"

namespace blendfit {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::PointCountMismatch: return "PointCountMismatch";
    case ErrorCode::NonMonotonicTimestamp: return "NonMonotonicTimestamp";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::WeightOutOfRange: return "WeightOutOfRange";
    case ErrorCode::SinkFailure: return "SinkFailure";
    case ErrorCode::Io: return "Io";
    case ErrorCode::DegenerateAnchors: return "DegenerateAnchors";
    case ErrorCode::CollinearAnchors: return "CollinearAnchors";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegenerateCovariance: return "DegenerateCovariance";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DegenerateAnchorPair: return "DegenerateAnchorPair";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DomainViolation: return "DomainViolation";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::ZeroResiduals: return "ZeroResiduals";
    case ErrorCode::SampleSizeOutOfRange: return "SampleSizeOutOfRange";
    case ErrorCode::InsufficientTraining: return "InsufficientTraining";
    case ErrorCode::AlignmentFailure: return "AlignmentFailure";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
  }
  return "Unknown";
}

namespace {

std::string decorate(ErrorCode code, const std::string& message,
                     std::optional<std::size_t> line) {
  std::string out(to_string(code));
  if (line) out += " at line " + std::to_string(*line);
  out += ": ";
  out += message;
  return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message,
             std::optional<std::size_t> line)
    : std::runtime_error(decorate(code, message, line)), code_(code), line_(line) {}

}  // namespace blendfit
