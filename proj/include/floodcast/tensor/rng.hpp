#pragma once

#include <cstdint>

namespace floodcast {

// Counter-based generator: draw k of stream `seed` is mix(seed, k), so a
// stream can be split into independent child streams by key without any
// shared state. Output is identical on every platform (no std:: distributions).
class RngState {
 public:
  RngState() = default;
  explicit RngState(std::uint64_t seed) : seed_(seed) {}

  static constexpr const char* algorithm() { return "splitmix64-counter"; }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  // Child stream keyed by `key`; the parent is not advanced.
  RngState split(std::uint64_t key) const;

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Standard normal via Box-Muller (one value per call, no cached spare).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace floodcast
