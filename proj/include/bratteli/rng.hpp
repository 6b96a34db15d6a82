#pragma once

#include <cstdint>
#include <span>

#include "bratteli/errors.hpp"

namespace bratteli {

// Counter-based pseudo-random generator (splitmix64 core).
//
// Unlike the <random> engines, output is identical across standard libraries
// and platforms, so seeded runs are byte-reproducible. Independent streams
// are derived from (seed, stream id) rather than by jumping, so Monte Carlo
// batches can fan out without sharing state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix(seed ^ 0x243F6A8885A308D3ULL)) {}

  // Independent stream derived from this generator's seed and `id`.
  Rng stream(std::uint64_t id) const {
    Rng r(0);
    r.state_ = mix(state_ ^ mix(id * 0x9E3779B97F4A7C15ULL + 0x2545F4914F6CDD1DULL));
    return r;
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in {0, ..., bound-1}; rejection sampling keeps it exactly uniform.
  std::uint64_t next_below(std::uint64_t bound) {
    if (bound == 0) throw RangeError("next_below: bound must be positive");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % bound;
  }

  int next_digit(int beta) { return static_cast<int>(next_below(static_cast<std::uint64_t>(beta))); }

  // Index into `weights` drawn proportionally to the (nonnegative) weights.
  std::size_t pick_weighted(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (total <= 0.0) throw RangeError("pick_weighted: nonpositive total weight");
    double u = next_double() * total;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      u -= weights[i];
      if (u < 0.0) return i;
    }
    return weights.size() - 1;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t state_;
};

}  // namespace bratteli
