#pragma once

#include "blendfit/core.hpp"
#include "blendfit/error.hpp"

#include <doctest.h>

#include <functional>
#include <random>
#include <vector>

namespace testing {

/// Runs `f` and returns the code of the blendfit::Error it throws.
template <class F>
blendfit::ErrorCode error_code(F&& f) {
  try {
    f();
  } catch (const blendfit::Error& e) {
    return e.code();
  }
  FAIL("expected a blendfit::Error");
  return blendfit::ErrorCode::Io;
}

inline std::vector<blendfit::Vec3> random_points(std::size_t n, std::uint64_t seed, double spread = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-spread, spread);
  std::vector<blendfit::Vec3> pts(n);
  for (auto& p : pts) p = blendfit::Vec3(u(rng), u(rng), u(rng));
  return pts;
}

}  // namespace testing
