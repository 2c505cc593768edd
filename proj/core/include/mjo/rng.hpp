#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mjo {

/// Deterministic draws on top of mt19937_64. std::*_distribution output is
/// implementation-defined, so the transforms live here: results are
/// bit-stable for a given seed on every platform.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (one value per call, two u64 draws).
  double normal() {
    // u1 in (0, 1]: shift by one ulp-step so log() never sees zero.
    double u1 = (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
    double u2 = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  /// Integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return gen_() % n; }

  std::mt19937_64& engine() { return gen_; }

private:
  std::mt19937_64 gen_;
};

}  // namespace mjo
