#pragma once

#include "blendfit/core.hpp"
#include "blendfit/regress.hpp"

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>

namespace blendfit::pipeline {
struct PipelineModel;
struct TrainConfig;
}  // namespace blendfit::pipeline

/// Text model files: one indented JSON document (see docs/model-format.md).
namespace blendfit::model_io {

inline constexpr std::string_view kFormatName = "blendfit-model";

/// Validates before writing. Throws SinkFailure when the stream goes bad.
void save_model(const pipeline::PipelineModel& model, std::ostream& out);
/// Throws VersionMismatch for an unknown format_version and SchemaViolation
/// for anything else that does not parse or validate.
pipeline::PipelineModel load_model(std::istream& in);

std::string to_text(const pipeline::PipelineModel& model);
pipeline::PipelineModel from_text(const std::string& text);

/// Bytes of the serialized regressor object (its share of a channel entry).
std::size_t serialized_size(const regress::RegressorModel& model);
/// Bytes of each serialized channel entry, in canonical order.
std::array<std::size_t, kBlendshapeCount> channel_sizes(const pipeline::PipelineModel& model);

/// Training configuration file; unspecified fields keep their defaults.
pipeline::TrainConfig load_train_config(std::istream& in);
pipeline::TrainConfig parse_train_config(const std::string& text);

}  // namespace blendfit::model_io
