#pragma once

#include "blendfit/core.hpp"

#include <cstddef>
#include <iosfwd>
#include <optional>

namespace blendfit {

/// Decimal places used for every serialized blendshape weight.
inline constexpr int kWeightDecimals = 6;

/// Incremental reader for the line-delimited landmark format:
///   {"points": 478, "convention": "norm-xy-reldepth", "fps_hint": 30}
///   {"t": 0, "lm": [[x,y,z], ...]}
/// The header is consumed by the constructor. `next()` throws on a bad record
/// and leaves the reader positioned after it, so callers that want to skip
/// corrupt records can catch and continue.
class LandmarkStreamReader {
 public:
  explicit LandmarkStreamReader(std::istream& in);

  const LandmarkStreamHeader& header() const noexcept { return header_; }
  std::optional<LandmarkFrame> next();
  /// 1-based number of the last line consumed.
  std::size_t line() const noexcept { return line_; }

 private:
  std::istream& in_;
  LandmarkStreamHeader header_;
  std::size_t line_ = 0;
  std::optional<TimestampMs> last_timestamp_;
};

class BlendshapeStreamReader {
 public:
  explicit BlendshapeStreamReader(std::istream& in);

  std::optional<BlendshapeFrame> next();
  std::size_t line() const noexcept { return line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
  std::optional<TimestampMs> last_timestamp_;
};

/// Streams frames out one at a time; the header is written on construction.
class BlendshapeStreamWriter {
 public:
  explicit BlendshapeStreamWriter(std::ostream& out);

  void write(const BlendshapeFrame& frame);
  std::size_t count() const noexcept { return count_; }

 private:
  std::ostream& out_;
  std::size_t count_ = 0;
};

/// Strict whole-stream readers: the first bad record aborts with its line number.
LandmarkStream read_landmark_stream(std::istream& in);
BlendshapeStream read_blendshape_stream(std::istream& in);

std::size_t write_blendshape_stream(const BlendshapeStream& stream, std::ostream& out);
/// Coordinates are written with shortest round-trip formatting, so read-back is exact.
std::size_t write_landmark_stream(const LandmarkStream& stream, std::ostream& out);

}  // namespace blendfit
