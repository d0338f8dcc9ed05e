#pragma once

#include <cstdint>
#include <random>

// Deterministic uniform generator for randomized tests. Uses an explicit
// bit mapping instead of std::uniform_real_distribution, whose output is
// implementation-defined.
struct TestRng {
  std::mt19937_64 gen;

  explicit TestRng(std::uint64_t seed) : gen(seed) {}

  double uniform01() {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(gen() % static_cast<std::uint64_t>(hi - lo + 1));
  }
};
