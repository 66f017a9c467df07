// Copyright (c) 2026 vmatt contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace vmatt {

// Deterministic random source. Raw bits come from std::mt19937_64 (fully
// specified by the standard); all distributions are derived here by hand so
// that streams are reproducible independent of the standard library build.
class Rng {
public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Inclusive on both ends.
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(eng_() % static_cast<uint64_t>(hi - lo + 1));
  }

  // Box-Muller without spare caching; two draws per sample keeps the stream
  // position a pure function of the call count.
  double normal() {
    double u1 = (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;  // (0,1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Derive an independent child stream; used to give each sequence/step its
  // own seed without coupling draw counts.
  Rng fork() { return Rng(eng_() ^ 0x9e3779b97f4a7c15ull); }

private:
  std::mt19937_64 eng_;
};

}  // namespace vmatt
