#pragma once

#include <cstdint>
#include <random>

namespace rbeki {

// Deterministic stream splitting: a root seed spawns named substreams so that
// every randomized stage (snapshot sampling, shape observations, fit draws,
// ensemble perturbations) owns an independent, reproducible generator.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(mix(seed ^ kDomain)) {}

  RngStream child(std::uint64_t tag) const {
    return RngStream(FromState{}, mix(state_ + 0x9e3779b97f4a7c15ULL * (tag + 1)));
  }

  std::mt19937_64 engine() const { return std::mt19937_64(state_); }

  std::uint64_t state() const { return state_; }

 private:
  struct FromState {};
  RngStream(FromState, std::uint64_t s) : state_(s) {}

  // splitmix64 finalizer
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static constexpr std::uint64_t kDomain = 0x7261626b69726e67ULL;

  std::uint64_t state_;
};

}  // namespace rbeki
