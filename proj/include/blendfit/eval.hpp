#pragma once

#include "blendfit/core.hpp"

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace blendfit::eval {

/// An annotated expression onset at a frame index.
struct EventAnnotation {
  BlendshapeName blendshape = BlendshapeName::EyeBlinkLeft;
  std::size_t frame = 0;

  friend bool operator==(const EventAnnotation&, const EventAnnotation&) = default;
};

struct EventMatchConfig {
  double default_f_min = 0.5;
  std::array<std::optional<double>, kBlendshapeCount> f_min{};
  std::size_t delta_k = 15;

  double f_min_for(BlendshapeName n) const noexcept {
    return f_min[index_of(n)].value_or(default_f_min);
  }
  /// Throws InvalidArgument unless every threshold lies in (0, 1).
  void validate() const;
};

/// First frame of every maximal run with value >= f_min.
std::vector<std::size_t> detect_events(std::span<const double> series, double f_min);

struct MatchCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  friend bool operator==(const MatchCounts&, const MatchCounts&) = default;
};

/// Greedy one-to-one matching in time order: each detection claims the
/// earliest unmatched annotation within +/- delta_k frames.
MatchCounts match_events(std::span<const std::size_t> detections,
                         std::span<const std::size_t> annotations, std::size_t delta_k);

struct F1Score {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Zero denominators give zero rather than NaN.
F1Score f1(std::size_t tp, std::size_t fp, std::size_t fn) noexcept;

struct EventScores {
  MatchCounts counts;
  F1Score score;
};

struct ChannelReport {
  BlendshapeName blendshape = BlendshapeName::EyeBlinkLeft;
  std::size_t annotations = 0;
  std::optional<EventScores> events_a;
  std::optional<EventScores> events_b;
  std::optional<double> pearson;   // undefined when either series is flat
  std::optional<double> spearman;
  std::optional<double> xi;        // xi(a -> b)
  double accuracy = 0.0;           // fraction of frames with |a - b| <= f_min
  double msd = 0.0;
  double deviation = 0.0;          // max |a - b|
  double mean_deviation = 0.0;     // mean (b - a)
};

/// Means over the rows where each metric is defined.
struct AverageRow {
  std::optional<double> precision_a, recall_a, f1_a;
  std::optional<double> precision_b, recall_b, f1_b;
  std::optional<double> pearson, spearman, xi;
  double accuracy = 0.0;
  double msd = 0.0;
  double deviation = 0.0;
  double mean_deviation = 0.0;
};

struct EvalReport {
  std::vector<ChannelReport> rows;
  AverageRow averages;
  bool has_annotations = false;
};

/// Channels reported: those listed, or else every channel that varies in
/// either stream or carries annotations. Throws AlignmentFailure unless the
/// streams have identical timestamps, IndexOutOfRange for an annotation past
/// the end.
EvalReport compare_streams(const BlendshapeStream& a, const BlendshapeStream& b,
                           const std::optional<std::vector<EventAnnotation>>& annotations,
                           const EventMatchConfig& config,
                           std::span<const BlendshapeName> channels = {});

/// Line-delimited {"bs": "<name>", "frame": <int>} records.
std::vector<EventAnnotation> read_annotations(std::istream& in);

/// Table-shaped CSV: event metrics at 2 decimals, stream comparison at 3.
void write_report_csv(const EvalReport& report, std::ostream& out);
/// Same content at full precision.
void write_report_json(const EvalReport& report, std::ostream& out);

}  // namespace blendfit::eval
