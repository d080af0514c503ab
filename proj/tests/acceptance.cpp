// Acceptance checks AC1-AC9. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails.

#include "blendfit/eval.hpp"
#include "blendfit/model_io.hpp"
#include "blendfit/pipeline.hpp"
#include "blendfit/smooth.hpp"
#include "blendfit/stats.hpp"
#include "blendfit/synth.hpp"

#include "oracles/reference_values.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace blendfit;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned tolerances.
constexpr double kAc1MseClean = 0.01;
constexpr double kAc1MseNoisy = 0.02;
constexpr double kAc1Seconds = 10.0;
constexpr int kAc2Seeds = 5;
constexpr double kAc2BpP = 0.01;
constexpr double kAc3Tol = 1e-9;
constexpr double kAc4SwTol = 1e-3;
constexpr double kAc4Seconds = 5.0;
constexpr std::size_t kAc6Frames = 10000;
constexpr double kAc6P50Ms = 1.0;
constexpr double kAc6P95Ms = 2.46;
constexpr std::size_t kAc7EntryBytes = 8 * 1024;
constexpr std::size_t kAc7ModelBytes = 1024 * 1024;

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("AC%d %s: %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<BlendshapeName> trainable_channels() {
  std::vector<BlendshapeName> out;
  for (std::size_t c = 0; c < kBlendshapeCount; ++c) {
    if (blendshape_at(c) != BlendshapeName::TongueOut) out.push_back(blendshape_at(c));
  }
  return out;
}

pipeline::PipelineModel train_full(double noise, std::uint64_t seed) {
  auto spec = synth::default_face_spec(7);
  spec.noise_sigma = noise;
  const auto channels = trainable_channels();
  const std::size_t steps = 30;
  const auto data = synth::generate(spec, synth::sequential_ramp_driver(channels, steps),
                                    steps * channels.size(), 30.0, seed);
  return pipeline::train(pipeline::TrainConfig::defaults(), data.landmarks.frames, data.targets.frames);
}

// MSE between the driven channel of a sine stream and the pipeline output.
double sine_mse(const pipeline::PipelineModel& model, BlendshapeName channel, double noise, std::uint64_t seed) {
  auto spec = synth::default_face_spec(7);
  spec.noise_sigma = noise;
  const auto probe = synth::generate(spec, synth::sine_driver(channel, 2.0, 0.9), 300, 30.0, seed);
  pipeline::StreamSession session(model);
  double se = 0.0;
  for (std::size_t f = 0; f < probe.landmarks.frames.size(); ++f) {
    const auto out = pipeline::predict_frame(model, session, probe.landmarks.frames[f]);
    const double d = out[channel] - probe.targets.frames[f][channel];
    se += d * d;
  }
  return se / static_cast<double>(probe.landmarks.frames.size());
}

// Trained on the noise-free ramp set; the noisy variant adds detector-scale
// jitter to the predicted stream.
void ac1() {
  const auto t0 = Clock::now();
  const auto model = train_full(0.0, 1);
  double worst_clean = 0.0;
  double worst_noisy = 0.0;
  std::string worst_name;
  for (auto ch : trainable_channels()) {
    worst_clean = std::max(worst_clean, sine_mse(model, ch, 0.0, 11));
    const double noisy = sine_mse(model, ch, synth::kDetectorJitterSigma, 13);
    if (noisy > worst_noisy) {
      worst_noisy = noisy;
      worst_name = std::string(name_of(ch));
    }
  }
  const double secs = seconds_since(t0);
  report(1, worst_clean < kAc1MseClean && worst_noisy < kAc1MseNoisy && secs < kAc1Seconds,
         "51 channels, max MSE clean " + fmt("%.2e", worst_clean) + " (< 0.01), noisy " + fmt("%.2e", worst_noisy) +
             " on " + worst_name + " (< 0.02), " + fmt("%.2f", secs) + " s train + predict (< 10 s)");
}

void ac2() {
  int ordered = 0;
  int heteroskedastic = 0;
  std::string detail;
  for (int seed = 1; seed <= kAc2Seeds; ++seed) {
    auto spec = synth::default_face_spec(7);
    spec.noise_sigma = synth::kDetectorJitterSigma;
    spec[BlendshapeName::CheekPuff].exponent = 2.0;
    const auto data = synth::generate(spec, synth::ramp_driver(BlendshapeName::CheekPuff, 100), 600, 30.0,
                                      static_cast<std::uint64_t>(seed));
    auto cfg = pipeline::TrainConfig::defaults();
    for (auto& c : cfg.channels) c.enabled = false;
    cfg[BlendshapeName::CheekPuff].enabled = true;
    cfg[BlendshapeName::CheekPuff].family = {regress::Family::Ols};
    const auto lin = pipeline::train(cfg, data.landmarks.frames, data.targets.frames);
    cfg[BlendshapeName::CheekPuff].family = {regress::Family::Exponential};
    const auto expo = pipeline::train(cfg, data.landmarks.frames, data.targets.frames);
    const auto& rl = lin[BlendshapeName::CheekPuff].regressor->report;
    const auto& re = expo[BlendshapeName::CheekPuff].regressor->report;
    if (re.mse < rl.mse) ++ordered;
    const double p = rl.breusch_pagan && rl.breusch_pagan->p_value ? *rl.breusch_pagan->p_value : 1.0;
    if (p < kAc2BpP) ++heteroskedastic;
    if (seed == 1) {
      detail = "seed 1: exp MSE " + fmt("%.3e", re.mse) + " < ols MSE " + fmt("%.3e", rl.mse) + ", BP p " +
               fmt("%.2e", p) + "; ";
    }
  }
  report(2, ordered == kAc2Seeds && heteroskedastic == kAc2Seeds,
         detail + std::to_string(ordered) + "/5 seeds ordered, " + std::to_string(heteroskedastic) +
             "/5 with BP p < 0.01");
}

void ac3() {
  smooth::SmootherConfig cfg;
  cfg.kind = smooth::SmootherKind::GatedMa;
  cfg.window = 5;
  auto state = smooth::make_state(cfg);
  for (double v : {0.1, 0.2, 0.3, 0.2, 0.2}) (void)smooth::step(cfg, state, v);
  const double worked = smooth::step(cfg, state, 0.25);
  const bool example_ok = std::abs(worked - 0.208333333333333) < kAc3Tol;

  auto step_state = smooth::make_state(cfg);
  for (int i = 0; i < 10; ++i) (void)smooth::step(cfg, step_state, 0.2);
  const bool step_ok = smooth::step(cfg, step_state, 0.9) == 0.9;

  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 0.02);
  std::vector<double> in(1000), out;
  for (auto& v : in) v = 0.5 + g(rng);
  auto noise_state = smooth::make_state(cfg);
  for (double v : in) out.push_back(smooth::step(cfg, noise_state, v));
  const double vin = stats::variance(in);
  const double vout = stats::variance(out);
  report(3, example_ok && step_ok && vout < vin,
         "worked example " + fmt("%.9f", worked) + ", step passes through: " + (step_ok ? "yes" : "no") +
             ", noise variance " + fmt("%.3e", vin) + " -> " + fmt("%.3e", vout));
}

void ac4() {
  const auto t0 = Clock::now();
  const double dw = stats::durbin_watson(std::vector<double>{1, -1, 1, -1});
  const std::vector<double> mono{1, 2, 3, 4, 5};
  const double xi = stats::xi_correlation(mono, mono);
  std::vector<double> x, x3;
  for (int i = -25; i <= 25; ++i) {
    x.push_back(i * 0.1);
    x3.push_back(std::pow(i * 0.1, 3));
  }
  const double rho = stats::spearman(x, x3);

  struct Sw {
    const double* data;
    std::size_t n;
    double w;
  };
  const Sw cases[] = {{oracle::kSwWeights, std::size(oracle::kSwWeights), oracle::kSwWeightsW},
                      {oracle::kSwNormal20, std::size(oracle::kSwNormal20), oracle::kSwNormal20W},
                      {oracle::kSwNormal50, std::size(oracle::kSwNormal50), oracle::kSwNormal50W},
                      {oracle::kSwExp40, std::size(oracle::kSwExp40), oracle::kSwExp40W}};
  double sw_err = 0.0;
  for (const auto& c : cases) {
    const auto r = stats::shapiro_wilk(std::span(c.data, c.n));
    sw_err = std::max(sw_err, std::abs(r.statistic - c.w));
  }

  const auto column = [](const double* v, std::size_t n) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(n), 1);
    for (std::size_t i = 0; i < n; ++i) m(static_cast<Eigen::Index>(i), 0) = v[i];
    return m;
  };
  const auto xb = column(oracle::kBpX, std::size(oracle::kBpX));
  const auto null_bp = stats::breusch_pagan(oracle::kBpHomoResid, xb);
  const auto alt_bp = stats::breusch_pagan(oracle::kBpHeteroResid, xb);
  const bool bp_ok = *null_bp.p_value > 0.05 && *alt_bp.p_value < 0.01 &&
                     std::abs(null_bp.statistic - oracle::kBpHomoLm) < 1e-9 &&
                     std::abs(alt_bp.statistic - oracle::kBpHeteroLm) < 1e-9;
  const double secs = seconds_since(t0);
  report(4, dw == 3.0 && xi == 0.5 && rho == 1.0 && sw_err < kAc4SwTol && bp_ok && secs < kAc4Seconds,
         "DW " + fmt("%.17g", dw) + ", xi " + fmt("%.17g", xi) + ", spearman " + fmt("%.17g", rho) +
             ", max |W - ref| " + fmt("%.1e", sw_err) + ", BP null p " + fmt("%.3f", *null_bp.p_value) +
             " alt p " + fmt("%.1e", *alt_bp.p_value) + ", " + fmt("%.3f", secs) + " s");
}

void ac5() {
  const auto perfect = eval::f1(9, 0, 0);
  const auto mixed = eval::f1(8, 2, 0);
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> count(0, 15), frame(0, 900), window(0, 30);
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::size_t> det(count(rng)), ann(count(rng));
    for (auto& d : det) d = frame(rng);
    for (auto& a : ann) a = frame(rng);
    std::sort(det.begin(), det.end());
    std::sort(ann.begin(), ann.end());
    const auto m = eval::match_events(det, ann, window(rng));
    if (m.tp + m.fp != det.size() || m.tp + m.fn != ann.size()) ++violations;
  }
  const bool ok = perfect.precision == 1.0 && perfect.recall == 1.0 && perfect.f1 == 1.0 &&
                  std::abs(mixed.f1 - 0.8889) < 5e-5 && violations == 0;
  report(5, ok, "F1(P=1,R=1) " + fmt("%.2f", perfect.f1) + ", F1(8,2,0) " + fmt("%.4f", mixed.f1) +
                    ", accounting violations " + std::to_string(violations) + "/1000");
}

void ac6(const pipeline::PipelineModel& model) {
  auto spec = synth::default_face_spec(7);
  spec.noise_sigma = synth::kDetectorJitterSigma;
  const auto probe = synth::generate(spec, synth::sine_driver(BlendshapeName::JawOpen, 2.0, 0.9), 1000, 30.0, 6);
  pipeline::StreamSession session(model);
  std::vector<double> ms;
  ms.reserve(kAc6Frames);
  for (const auto& f : probe.landmarks.frames) (void)pipeline::predict_frame(model, session, f);  // warm-up
  while (ms.size() < kAc6Frames) {
    session.reset();
    for (const auto& f : probe.landmarks.frames) {
      const auto t0 = Clock::now();
      (void)pipeline::predict_frame(model, session, f);
      ms.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
    }
  }
  std::sort(ms.begin(), ms.end());
  const auto pct = [&](double q) { return ms[static_cast<std::size_t>(q * static_cast<double>(ms.size() - 1))]; };
  const double p50 = pct(0.50);
  const double p95 = pct(0.95);
  report(6, p50 <= kAc6P50Ms && p95 <= kAc6P95Ms,
         std::to_string(ms.size()) + " frames, " + std::to_string(model.enabled_count()) + " channels, p50 " +
             fmt("%.4f", p50) + " ms (<= 1.0), p95 " + fmt("%.4f", p95) + " ms (<= 2.46)");
}

void ac7(const pipeline::PipelineModel& model) {
  const auto sizes = model_io::channel_sizes(model);
  std::size_t worst = 0;
  for (std::size_t c = 0; c < kBlendshapeCount; ++c) {
    const auto& ch = model.channels[c];
    if (ch.enabled && ch.regressor->spec.family == regress::Family::Ols) worst = std::max(worst, sizes[c]);
  }
  const std::size_t total = model_io::to_text(model).size();
  report(7, worst > 0 && worst <= kAc7EntryBytes && total <= kAc7ModelBytes,
         "largest ols entry " + std::to_string(worst) + " B (<= 8192), full model " + std::to_string(total) +
             " B (<= 1048576)");
}

void ac8(const pipeline::PipelineModel& model) {
  std::stringstream buf;
  model_io::save_model(model, buf);
  const auto loaded = model_io::load_model(buf);
  auto spec = synth::default_face_spec(7);
  spec.noise_sigma = synth::kDetectorJitterSigma;
  const auto stream = synth::generate(spec, synth::sine_driver(BlendshapeName::MouthFunnel, 1.5, 0.7), 1000, 30.0, 8);
  pipeline::StreamSession a(model), b(loaded);
  std::size_t mismatched = 0;
  std::vector<BlendshapeFrame> first;
  for (const auto& f : stream.landmarks.frames) {
    const auto x = pipeline::predict_frame(model, a, f);
    if (!(x == pipeline::predict_frame(loaded, b, f))) ++mismatched;
    first.push_back(x);
  }
  a.reset();
  std::size_t replay_diff = 0;
  for (std::size_t i = 0; i < stream.landmarks.frames.size(); ++i) {
    if (!(pipeline::predict_frame(model, a, stream.landmarks.frames[i]) == first[i])) ++replay_diff;
  }
  report(8, mismatched == 0 && replay_diff == 0,
         "save/load mismatches " + std::to_string(mismatched) + "/1000, reset+replay mismatches " +
             std::to_string(replay_diff) + "/1000");
}

void ac9(const pipeline::PipelineModel& trained) {
  const auto model = pipeline::with_overrides(trained, std::nullopt, true);
  auto spec = synth::default_face_spec(7);
  spec.noise_sigma = synth::kDetectorJitterSigma;
  const auto stream = synth::generate(
      spec, synth::sequential_ramp_driver({BlendshapeName::JawOpen, BlendshapeName::CheekPuff, BlendshapeName::EyeWideLeft}, 17),
      500, 30.0, 9);
  pipeline::StreamSession session(model);
  std::array<smooth::SmootherState, kBlendshapeCount> ref;
  for (std::size_t c = 0; c < kBlendshapeCount; ++c) ref[c] = smooth::make_state(model.channels[c].smoother);
  std::size_t mismatched = 0;
  std::size_t compared = 0;
  for (const auto& f : stream.landmarks.frames) {
    const auto out = pipeline::predict_frame(model, session, f);
    const auto raw = pipeline::predict_raw_frame(model, f);
    for (std::size_t c = 0; c < kBlendshapeCount; ++c) {
      if (!raw[c]) continue;
      const double clamped = std::clamp(*raw[c], 0.0, 1.0);
      const double expect =
          std::clamp(smooth::step(model.channels[c].smoother, ref[c], clamped), 0.0, 1.0);
      ++compared;
      if (out.weights()[c] != expect) ++mismatched;
    }
  }
  report(9, compared > 0 && mismatched == 0,
         std::to_string(mismatched) + " of " + std::to_string(compared) +
             " channel-frames differ from smooth(clamp(w.f + b))");
}

void guarded(int id, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    report(id, false, std::string("threw: ") + e.what());
  }
}

}  // namespace

int main() {
  pipeline::PipelineModel clean;
  double train_secs = 0.0;
  try {
    const auto t0 = Clock::now();
    clean = train_full(0.0, 1);
    train_secs = seconds_since(t0);
  } catch (const std::exception& e) {
    std::printf("training failed: %s\n", e.what());
    return 1;
  }
  std::printf("trained %zu channels on the clean ramp set in %.2f s\n", clean.enabled_count(), train_secs);
  guarded(1, ac1);
  guarded(2, ac2);
  guarded(3, ac3);
  guarded(4, ac4);
  guarded(5, ac5);
  guarded(6, [&] { ac6(clean); });
  guarded(7, [&] { ac7(clean); });
  guarded(8, [&] { ac8(clean); });
  guarded(9, [&] { ac9(clean); });
  return failures == 0 ? 0 : 1;
}
