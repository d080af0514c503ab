#include "blendfit/model_io.hpp"
#include "blendfit/pipeline.hpp"
#include "blendfit/synth.hpp"

#include "support.hpp"

#include <nlohmann/json.hpp>

#include <sstream>

using namespace blendfit;
using namespace blendfit::pipeline;
using testing::error_code;
using Json = nlohmann::ordered_json;

namespace {

const synth::Generated& data() {
  static const auto d = synth::generate(
      synth::default_face_spec(7),
      synth::sequential_ramp_driver({BlendshapeName::JawOpen, BlendshapeName::MouthPucker}, 40), 80, 30.0,
      2);
  return d;
}

const PipelineModel& model() {
  static const auto m = [] {
    auto cfg = TrainConfig::defaults();
    for (auto& c : cfg.channels) c.enabled = false;
    cfg[BlendshapeName::JawOpen].enabled = true;
    cfg[BlendshapeName::JawOpen].correction = *regress::correction_preset("default");
    cfg[BlendshapeName::MouthPucker].enabled = true;
    cfg[BlendshapeName::MouthPucker].family = {regress::Family::Exponential};
    return train(cfg, data().landmarks.frames, data().targets.frames);
  }();
  return m;
}

Json as_json(const PipelineModel& m) { return Json::parse(model_io::to_text(m)); }

}  // namespace

TEST_CASE("round trip preserves predictions bit for bit") {
  std::stringstream buf;
  model_io::save_model(model(), buf);
  const auto loaded = model_io::load_model(buf);
  CHECK(loaded.enabled_count() == 2);
  CHECK(model_io::to_text(loaded) == model_io::to_text(model()));

  const auto probe = synth::generate(synth::default_face_spec(7),
                                     synth::sine_driver(BlendshapeName::JawOpen, 2.0, 0.8), 100, 30.0, 9);
  StreamSession a(model()), b(loaded);
  for (const auto& f : probe.landmarks.frames) {
    CHECK(predict_frame(model(), a, f) == predict_frame(loaded, b, f));
  }
}

TEST_CASE("every channel entry fits in 8 KiB") {
  for (auto s : model_io::channel_sizes(model())) CHECK(s <= 8192);
  const auto& r = *model()[BlendshapeName::JawOpen].regressor;
  CHECK(r.report.model_bytes == model_io::serialized_size(r));
}

TEST_CASE("unknown format version") {
  auto j = as_json(model());
  j["format_version"] = 99;
  CHECK(error_code([&] { (void)model_io::from_text(j.dump()); }) == ErrorCode::VersionMismatch);
}

TEST_CASE("schema violations name the offending path") {
  auto j = as_json(model());
  j["channels"][0]["enabled"] = "yes";
  try {
    (void)model_io::from_text(j.dump());
    FAIL("expected a schema error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SchemaViolation);
    CHECK(std::string(e.what()).find("channels[0]") != std::string::npos);
  }

  j = as_json(model());
  j["channels"].erase(j["channels"].begin());
  CHECK(error_code([&] { (void)model_io::from_text(j.dump()); }) == ErrorCode::SchemaViolation);

  j = as_json(model());
  j.erase("format");
  CHECK(error_code([&] { (void)model_io::from_text(j.dump()); }) == ErrorCode::SchemaViolation);

  // an enabled channel whose regressor disagrees with its chain
  j = as_json(model());
  auto& reg = j["channels"][static_cast<std::size_t>(index_of(BlendshapeName::JawOpen))]["regressor"];
  reg["input_dim"] = 7;
  CHECK(error_code([&] { (void)model_io::from_text(j.dump()); }) == ErrorCode::SchemaViolation);

  CHECK(error_code([] { (void)model_io::from_text("{not json"); }) == ErrorCode::SchemaViolation);
  CHECK(error_code([] { (void)model_io::from_text("[]"); }) == ErrorCode::SchemaViolation);
}

TEST_CASE("non-finite numbers survive as strings") {
  auto m = model();
  auto& ch = m[BlendshapeName::JawOpen];
  ch.regressor->report.f_statistic = stats::kInfinity;
  const auto text = model_io::to_text(m);
  CHECK(text.find("\"inf\"") != std::string::npos);
  CHECK(model_io::from_text(text)[BlendshapeName::JawOpen].regressor->report.f_statistic == stats::kInfinity);
}

TEST_CASE("train config parsing") {
  const auto cfg = model_io::parse_train_config(R"({
    "min_samples": 20,
    "basis": {"anchor_nose": 4},
    "residual_transform": {"kind": "box_cox", "lambda": 0.5, "offset": 1.0},
    "channels": {
      "JawOpen": {"family": "polynomial", "degree": 3, "percentile": 0.04,
                  "chain": ["displacement", {"kind": "pcd", "components": 2}, "standardize"],
                  "correction": {"preset": "upper_edge", "gamma": 0.02},
                  "smoother": {"kind": "ewma", "alpha": 0.3}},
      "CheekPuff": {"enabled": false},
      "TongueOut": {"enabled": true, "smoother": "kalman"}
    }
  })");
  CHECK(cfg.min_samples == 20);
  CHECK(cfg.basis.anchor_nose == 4);
  CHECK(cfg.fit_options.residual_transform.kind == transforms::ResidualTransform::Kind::BoxCox);
  const auto& jaw = cfg[BlendshapeName::JawOpen];
  CHECK(jaw.family.family == regress::Family::Polynomial);
  CHECK(jaw.family.degree == 3);
  CHECK(jaw.percentile == 0.04);
  REQUIRE(jaw.chain.size() == 3);
  CHECK(jaw.chain[1].kind == ChainStepSpec::Kind::Pcd);
  CHECK(jaw.chain[1].components == 2);
  CHECK(jaw.correction.gamma == 0.02);
  CHECK_FALSE(jaw.correction.g.is_zero());
  CHECK(jaw.smoother.kind == smooth::SmootherKind::Ewma);
  CHECK(jaw.smoother.alpha == 0.3);
  CHECK_FALSE(cfg[BlendshapeName::CheekPuff].enabled);
  CHECK(cfg[BlendshapeName::TongueOut].enabled);
  CHECK(cfg[BlendshapeName::TongueOut].smoother.kind == smooth::SmootherKind::Kalman);
  CHECK(cfg[BlendshapeName::MouthClose].enabled);
}

TEST_CASE("train config whitelist and errors") {
  const auto cfg = model_io::parse_train_config(R"({"enabled": ["JawOpen", "EyeBlinkLeft"]})");
  std::size_t on = 0;
  for (const auto& c : cfg.channels) on += c.enabled ? 1 : 0;
  CHECK(on == 2);
  CHECK(cfg[BlendshapeName::EyeBlinkLeft].enabled);

  for (const char* bad : {R"({"channels": {"JawOpen": {"famly": "ols"}}})",
                          R"({"channels": {"NotAShape": {}}})",
                          R"({"channels": {"JawOpen": {"family": "svm"}}})",
                          R"({"channels": {"JawOpen": {"chain": ["fourier"]}}})",
                          R"({"channels": {"JawOpen": {"correction": "extreme"}}})",
                          R"({"enabled": ["Nope"]})", "[1, 2]"}) {
    CAPTURE(bad);
    CHECK(error_code([&] { (void)model_io::parse_train_config(bad); }) == ErrorCode::SchemaViolation);
  }
}
