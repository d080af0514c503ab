#include "blendfit/stream_io.hpp"

#include "blendfit/error.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <charconv>
#include <istream>
#include <ostream>
#include <string>

namespace blendfit {

using nlohmann::json;

namespace {

// Returns false at end of input. Blank lines are skipped but still counted.
bool next_nonblank_line(std::istream& in, std::string& line, std::size_t& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos) return true;
  }
  return false;
}

json parse_record(const std::string& line, std::size_t line_no) {
  json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::MalformedRecord, "not a JSON object", line_no);
  }
  return j;
}

TimestampMs parse_timestamp(const json& j, std::size_t line_no) {
  const auto it = j.find("t");
  if (it == j.end() || !it->is_number_integer() || it->get<std::int64_t>() < 0) {
    throw Error(ErrorCode::MalformedRecord, "missing or invalid \"t\"", line_no);
  }
  return it->get<TimestampMs>();
}

double finite_number(const json& v, std::size_t line_no) {
  if (!v.is_number()) {
    throw Error(ErrorCode::MalformedRecord, "expected a number", line_no);
  }
  return v.get<double>();
}

void check_monotonic(std::optional<TimestampMs>& last, TimestampMs t, std::size_t line_no) {
  if (last && t <= *last) {
    throw Error(ErrorCode::NonMonotonicTimestamp,
                "timestamp " + std::to_string(t) + " not after " + std::to_string(*last), line_no);
  }
}

void append_shortest(std::string& out, double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.append(buf.data(), res.ptr);
}

void append_fixed(std::string& out, double v) {
  if (v == 0.0) v = 0.0;  // drop negative zero
  std::array<char, 32> buf{};
  const auto res =
      std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, kWeightDecimals);
  out.append(buf.data(), res.ptr);
}

void emit(std::ostream& out, const std::string& line) {
  out << line << '\n';
  if (!out) throw Error(ErrorCode::SinkFailure, "write failed");
}

}  // namespace

LandmarkStreamReader::LandmarkStreamReader(std::istream& in) : in_(in) {
  std::string line;
  if (!next_nonblank_line(in_, line, line_)) {
    throw Error(ErrorCode::MalformedRecord, "missing header record", line_ + 1);
  }
  const json j = parse_record(line, line_);
  const auto points = j.find("points");
  if (points == j.end() || !points->is_number_unsigned() || points->get<std::size_t>() == 0) {
    throw Error(ErrorCode::MalformedRecord, "header needs a positive \"points\"", line_);
  }
  header_.points = points->get<std::size_t>();
  if (const auto conv = j.find("convention"); conv != j.end()) {
    if (!conv->is_string()) throw Error(ErrorCode::MalformedRecord, "bad \"convention\"", line_);
    header_.convention = conv->get<std::string>();
  }
  if (const auto fps = j.find("fps_hint"); fps != j.end() && !fps->is_null()) {
    if (!fps->is_number()) throw Error(ErrorCode::MalformedRecord, "bad \"fps_hint\"", line_);
    header_.fps_hint = fps->get<double>();
  }
}

std::optional<LandmarkFrame> LandmarkStreamReader::next() {
  std::string line;
  if (!next_nonblank_line(in_, line, line_)) return std::nullopt;
  const json j = parse_record(line, line_);
  const TimestampMs t = parse_timestamp(j, line_);
  const auto lm = j.find("lm");
  if (lm == j.end() || !lm->is_array()) {
    throw Error(ErrorCode::MalformedRecord, "missing \"lm\" array", line_);
  }
  if (lm->size() != header_.points) {
    throw Error(ErrorCode::PointCountMismatch,
                "record has " + std::to_string(lm->size()) + " points, header declares " +
                    std::to_string(header_.points),
                line_);
  }
  std::vector<Vec3> points;
  points.reserve(lm->size());
  for (const auto& p : *lm) {
    if (!p.is_array() || p.size() != 3) {
      throw Error(ErrorCode::MalformedRecord, "landmark must be [x,y,z]", line_);
    }
    points.emplace_back(finite_number(p[0], line_), finite_number(p[1], line_),
                        finite_number(p[2], line_));
  }
  check_monotonic(last_timestamp_, t, line_);
  try {
    LandmarkFrame frame(t, std::move(points));
    last_timestamp_ = t;
    return frame;
  } catch (const Error& e) {
    throw Error(e.code(), e.what(), line_);
  }
}

BlendshapeStreamReader::BlendshapeStreamReader(std::istream& in) : in_(in) {
  std::string line;
  if (!next_nonblank_line(in_, line, line_)) {
    throw Error(ErrorCode::MalformedRecord, "missing header record", line_ + 1);
  }
  const json j = parse_record(line, line_);
  const auto channels = j.find("channels");
  if (channels == j.end() || !channels->is_array() || channels->size() != kBlendshapeCount) {
    throw Error(ErrorCode::MalformedRecord, "header needs 52 \"channels\"", line_);
  }
  const auto& names = canonical_channel_names();
  for (std::size_t i = 0; i < kBlendshapeCount; ++i) {
    const auto& c = (*channels)[i];
    if (!c.is_string() || c.get<std::string>() != names[i]) {
      throw Error(ErrorCode::MalformedRecord,
                  "channel " + std::to_string(i) + " must be " + std::string(names[i]), line_);
    }
  }
}

std::optional<BlendshapeFrame> BlendshapeStreamReader::next() {
  std::string line;
  if (!next_nonblank_line(in_, line, line_)) return std::nullopt;
  const json j = parse_record(line, line_);
  const TimestampMs t = parse_timestamp(j, line_);
  const auto w = j.find("w");
  if (w == j.end() || !w->is_array() || w->size() != kBlendshapeCount) {
    throw Error(ErrorCode::MalformedRecord, "\"w\" must hold 52 numbers", line_);
  }
  BlendshapeWeights weights{};
  for (std::size_t i = 0; i < kBlendshapeCount; ++i) weights[i] = finite_number((*w)[i], line_);
  check_monotonic(last_timestamp_, t, line_);
  try {
    BlendshapeFrame frame(t, weights);
    last_timestamp_ = t;
    return frame;
  } catch (const Error& e) {
    throw Error(e.code(), e.what(), line_);
  }
}

BlendshapeStreamWriter::BlendshapeStreamWriter(std::ostream& out) : out_(out) {
  json header;
  header["channels"] = canonical_channel_names();
  emit(out_, header.dump());
}

void BlendshapeStreamWriter::write(const BlendshapeFrame& frame) {
  std::string line = "{\"t\":" + std::to_string(frame.timestamp_ms()) + ",\"w\":[";
  line.reserve(line.size() + kBlendshapeCount * 9);
  const auto& w = frame.weights();
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) line.push_back(',');
    append_fixed(line, w[i]);
  }
  line += "]}";
  emit(out_, line);
  ++count_;
}

LandmarkStream read_landmark_stream(std::istream& in) {
  LandmarkStreamReader reader(in);
  LandmarkStream stream;
  stream.header = reader.header();
  while (auto frame = reader.next()) stream.frames.push_back(std::move(*frame));
  return stream;
}

BlendshapeStream read_blendshape_stream(std::istream& in) {
  BlendshapeStreamReader reader(in);
  BlendshapeStream stream;
  while (auto frame = reader.next()) stream.frames.push_back(*frame);
  return stream;
}

std::size_t write_blendshape_stream(const BlendshapeStream& stream, std::ostream& out) {
  BlendshapeStreamWriter writer(out);
  for (const auto& f : stream.frames) writer.write(f);
  return writer.count();
}

std::size_t write_landmark_stream(const LandmarkStream& stream, std::ostream& out) {
  stream.validate();
  json header;
  header["points"] = stream.header.points;
  header["convention"] = stream.header.convention;
  header["fps_hint"] = stream.header.fps_hint ? json(*stream.header.fps_hint) : json(nullptr);
  emit(out, header.dump());
  std::string line;
  for (const auto& frame : stream.frames) {
    line = "{\"t\":" + std::to_string(frame.timestamp_ms()) + ",\"lm\":[";
    bool first = true;
    for (const auto& p : frame.points()) {
      if (!first) line.push_back(',');
      first = false;
      line.push_back('[');
      append_shortest(line, p.x());
      line.push_back(',');
      append_shortest(line, p.y());
      line.push_back(',');
      append_shortest(line, p.z());
      line.push_back(']');
    }
    line += "]}";
    emit(out, line);
  }
  return stream.frames.size();
}

}  // namespace blendfit
