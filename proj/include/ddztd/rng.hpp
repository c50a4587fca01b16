#pragma once

#include <cstdint>
#include <vector>

namespace ddztd {

// Deterministic 64-bit generator built on SplitMix64 (Steele, Lea & Flood,
// "Fast splittable pseudorandom number generators", 2014).  The algorithm is
// spelled out here so that any implementation language reproduces identical
// streams:
//
//   next():  state += 0x9E3779B97F4A7C15
//            z = state
//            z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//            z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//            return z ^ (z >> 31)
//
// Substream derivation for (seed, stream_id):
//
//   g = stream_id * 0x9E3779B97F4A7C15 + 0xD1B54A32D192ED03
//   g = (g ^ (g >> 30)) * 0xBF58476D1CE4E5B9
//   g = (g ^ (g >> 27)) * 0x94D049BB133111EB
//   g = g ^ (g >> 31)
//   initial state = seed ^ g
//
// Doubles are produced as (next() >> 11) * 2^-53, i.e. 53 uniform mantissa
// bits in [0, 1).
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream_id = 0)
      : state_(seed ^ mix_(stream_id * 0x9E3779B97F4A7C15ULL +
                           0xD1B54A32D192ED03ULL)) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix_(state_);
  }

  // Uniform double in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return next_double() < p; }

  // Uniform integer in [0, n).  Rejection-free modulo of a 64-bit draw is
  // fine for the small n used throughout this library.
  std::size_t next_index(std::size_t n) {
    return static_cast<std::size_t>(next_u64() % static_cast<std::uint64_t>(n));
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Samples an index from an unnormalized nonnegative weight vector.
  std::size_t discrete(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = next_double() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return i;
    }
    return weights.empty() ? 0 : weights.size() - 1;
  }

  // Rademacher +/-1 draw, used by SPSA perturbations.
  double rademacher() { return (next_u64() & 1ULL) ? 1.0 : -1.0; }

 private:
  static std::uint64_t mix_(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

// Named substream, keeping call sites explicit about which stream they draw
// from so results are independent of evaluation order across workers.
inline Rng rng_stream(std::uint64_t seed, std::uint64_t stream_id) {
  return Rng(seed, stream_id);
}

}  // namespace ddztd
