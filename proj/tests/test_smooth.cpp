#include "blendfit/smooth.hpp"
#include "blendfit/stats.hpp"

#include "support.hpp"

#include <cmath>
#include <random>

using namespace blendfit;
using namespace blendfit::smooth;

namespace {

std::vector<double> run(const SmootherConfig& cfg, const std::vector<double>& in) {
  auto state = make_state(cfg);
  std::vector<double> out;
  for (double v : in) out.push_back(step(cfg, state, v));
  return out;
}

SmootherConfig gated(std::size_t n) {
  SmootherConfig c;
  c.kind = SmootherKind::GatedMa;
  c.window = n;
  return c;
}

}  // namespace

TEST_CASE("gated average blends values inside one standard deviation") {
  const auto cfg = gated(5);
  const std::vector<double> history{0.1, 0.2, 0.3, 0.2, 0.2};  // mean 0.2, sd ~0.071
  auto in = history;
  in.push_back(0.25);
  const auto out = run(cfg, in);
  CHECK(std::abs(out[5] - 1.25 / 6.0) < 1e-9);
  CHECK(out[5] == doctest::Approx(0.208333).epsilon(1e-6));
  // warm-up passes through
  for (int i = 0; i < 5; ++i) CHECK(out[i] == history[i]);

  auto jump = history;
  jump.push_back(0.9);
  CHECK(run(cfg, jump)[5] == 0.9);
}

TEST_CASE("constant input is a fixed point of every smoother") {
  const std::vector<double> flat(50, 0.37);
  for (auto kind : {SmootherKind::None, SmootherKind::GatedMa, SmootherKind::Ma, SmootherKind::Ewma,
                    SmootherKind::Lowpass, SmootherKind::Kalman}) {
    SmootherConfig c;
    c.kind = kind;
    for (double v : run(c, flat)) CHECK(v == doctest::Approx(0.37).epsilon(1e-14));
  }
}

TEST_CASE("ewma and lowpass recurrences") {
  SmootherConfig c;
  c.kind = SmootherKind::Ewma;
  c.alpha = 0.5;
  const auto out = run(c, {1.0, 0.0, 0.0});
  CHECK(out == std::vector<double>{1.0, 0.5, 0.25});

  c.kind = SmootherKind::Lowpass;
  c.cutoff_hz = 6.0;
  c.frame_interval_ms = 1000.0 / 30.0;
  const double rc = 1.0 / (2.0 * M_PI * 6.0);
  const double dt = 1.0 / 30.0;
  CHECK(c.lowpass_alpha() == doctest::Approx(dt / (rc + dt)));
}

TEST_CASE("moving average over a window") {
  SmootherConfig c;
  c.kind = SmootherKind::Ma;
  c.window = 3;
  const auto out = run(c, {3.0, 0.0, 0.0, 6.0});
  CHECK(out == std::vector<double>{3.0, 1.5, 1.0, 2.0});
}

TEST_CASE("kalman converges to a constant signal under noise") {
  SmootherConfig c;
  c.kind = SmootherKind::Kalman;
  c.process_noise = 1e-6;
  c.measurement_noise = 1e-2;
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 0.05);
  std::vector<double> in(600);
  for (auto& v : in) v = 0.6 + g(rng);
  const auto out = run(c, in);
  CHECK(std::abs(out.back() - 0.6) < 0.02);
}

TEST_CASE("outputs stay in [0, 1] for inputs in [0, 1]") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> in(1000);
  for (auto& v : in) v = u(rng);
  for (auto kind : {SmootherKind::GatedMa, SmootherKind::Ma, SmootherKind::Ewma, SmootherKind::Lowpass,
                    SmootherKind::Kalman}) {
    SmootherConfig c;
    c.kind = kind;
    for (double v : run(c, in)) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("gated smoother follows a step on the next frame") {
  std::vector<double> in(10, 0.0);
  in.insert(in.end(), 10, 1.0);
  const auto out = run(gated(5), in);
  CHECK(out[10] == 1.0);
}

TEST_CASE("smoothing reduces variance and raises lag-1 autocorrelation of noise") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g(0.0, 0.03);
  std::vector<double> in(3000);
  for (auto& v : in) v = 0.5 + g(rng);
  for (auto kind : {SmootherKind::GatedMa, SmootherKind::Ma, SmootherKind::Ewma, SmootherKind::Kalman}) {
    SmootherConfig c;
    c.kind = kind;
    const auto out = run(c, in);
    CHECK(stats::variance(out) < stats::variance(in));
    CHECK(stats::autocorrelation_lag1(out) > stats::autocorrelation_lag1(in));
  }
}

TEST_CASE("replay after reset is deterministic") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> in(200);
  for (auto& v : in) v = u(rng);
  const auto cfg = gated(4);
  auto state = make_state(cfg);
  std::vector<double> first, second;
  for (double v : in) first.push_back(step(cfg, state, v));
  reset(state);
  for (double v : in) second.push_back(step(cfg, state, v));
  CHECK(first == second);
}

TEST_CASE("ring buffer order and config validation") {
  RingBuffer b(3);
  for (double v : {1.0, 2.0, 3.0, 4.0}) b.push(v);
  CHECK(b.full());
  CHECK(b[0] == 2.0);
  CHECK(b[2] == 4.0);

  SmootherConfig c = gated(1);
  CHECK_THROWS_AS(c.validate(), Error);
  c.kind = SmootherKind::Ewma;
  c.alpha = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  CHECK(parse_kind("gated_ma") == SmootherKind::GatedMa);
  CHECK(kind_name(SmootherKind::Kalman) == "kalman");
  CHECK_FALSE(parse_kind("median"));
}
