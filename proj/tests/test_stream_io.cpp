#include "blendfit/error.hpp"
#include "blendfit/stream_io.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <random>
#include <sstream>
#include <string>

using namespace blendfit;

namespace {

std::string landmark_line(long t, std::size_t points, double base = 0.5) {
  nlohmann::json lm = nlohmann::json::array();
  for (std::size_t i = 0; i < points; ++i) lm.push_back({base, base + 0.001 * static_cast<double>(i), 0.0});
  return nlohmann::json{{"t", t}, {"lm", lm}}.dump() + "\n";
}

const std::string kHeader = R"({"points": 478, "convention": "norm-xy-reldepth", "fps_hint": 30})" "\n";

ErrorCode code_of(const std::string& text, std::size_t* line = nullptr) {
  std::istringstream in(text);
  try {
    (void)read_landmark_stream(in);
  } catch (const Error& e) {
    if (line && e.line()) *line = *e.line();
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("two valid records read as two frames") {
  std::istringstream in(kHeader + landmark_line(0, 478) + landmark_line(33, 478));
  const auto s = read_landmark_stream(in);
  CHECK(s.frames.size() == 2);
  CHECK(s.header.points == 478);
  CHECK(s.header.fps_hint == doctest::Approx(30.0));
  CHECK(s.frames[1].timestamp_ms() == 33);
  CHECK(s.frames[1][2].y() == doctest::Approx(0.502));
}

TEST_CASE("record with 477 points fails at its line") {
  std::size_t line = 0;
  CHECK(code_of(kHeader + landmark_line(0, 478) + landmark_line(33, 477), &line) ==
        ErrorCode::PointCountMismatch);
  CHECK(line == 3);
}

TEST_CASE("repeated timestamp is rejected") {
  std::size_t line = 0;
  CHECK(code_of(kHeader + landmark_line(10, 478) + landmark_line(10, 478), &line) ==
        ErrorCode::NonMonotonicTimestamp);
  CHECK(line == 3);
}

TEST_CASE("malformed records report their line") {
  std::size_t line = 0;
  CHECK(code_of(kHeader + landmark_line(0, 478) + "{not json\n", &line) == ErrorCode::MalformedRecord);
  CHECK(line == 3);
  CHECK(code_of(kHeader + R"({"t": 0})" "\n") == ErrorCode::MalformedRecord);
  CHECK(code_of("") == ErrorCode::MalformedRecord);
}

TEST_CASE("incremental reader can skip a corrupt record and continue") {
  std::istringstream in(kHeader + landmark_line(0, 478) + "garbage\n" + landmark_line(66, 478));
  LandmarkStreamReader reader(in);
  REQUIRE(reader.next().has_value());
  CHECK_THROWS_AS(reader.next(), Error);
  const auto f = reader.next();
  REQUIRE(f.has_value());
  CHECK(f->timestamp_ms() == 66);
  CHECK_FALSE(reader.next().has_value());
}

TEST_CASE("empty blendshape stream writes only the header") {
  std::ostringstream out;
  CHECK(write_blendshape_stream(BlendshapeStream{}, out) == 0);
  const auto text = out.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 1);
  std::istringstream in(text);
  CHECK(read_blendshape_stream(in).frames.empty());
}

TEST_CASE("blendshape stream round trip at fixed precision") {
  BlendshapeStream s;
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> micro(0, 1000000);
  for (int i = 0; i < 3; ++i) {
    BlendshapeWeights w{};
    for (auto& v : w) v = micro(rng) / 1e6;
    s.frames.emplace_back(i * 33, w);
  }
  std::ostringstream out;
  CHECK(write_blendshape_stream(s, out) == 3);
  std::istringstream in(out.str());
  CHECK(read_blendshape_stream(in) == s);
}

TEST_CASE("weights are written with six decimals") {
  BlendshapeWeights w{};
  w[0] = 0.123456789;
  BlendshapeStream s;
  s.frames.emplace_back(0, w);
  std::ostringstream out;
  write_blendshape_stream(s, out);
  CHECK(out.str().find("0.123457") != std::string::npos);
  std::istringstream in(out.str());
  CHECK(read_blendshape_stream(in).frames[0].weights()[0] == 0.123457);
}

TEST_CASE("blendshape header must list the canonical channels") {
  std::istringstream in(R"({"channels": ["A"]})" "\n");
  CHECK_THROWS_AS(read_blendshape_stream(in), Error);
}

TEST_CASE("landmark stream round trip is exact") {
  LandmarkStream s;
  s.header.points = 4;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 5; ++i) {
    std::vector<Vec3> pts(4);
    for (auto& p : pts) p = Vec3(u(rng), u(rng), u(rng) * 1e-7);
    s.frames.emplace_back(i * 17, pts);
  }
  std::ostringstream out;
  write_landmark_stream(s, out);
  std::istringstream in(out.str());
  CHECK(read_landmark_stream(in) == s);
}

TEST_CASE("writer reports a failed sink") {
  std::ostringstream out;
  BlendshapeStreamWriter writer(out);
  out.setstate(std::ios::badbit);
  try {
    writer.write(BlendshapeFrame{});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SinkFailure);
  }
}
