#pragma once

#include <cstdint>
#include <random>

namespace proprio {

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng{seed}; }

// Per-trial streams are derived by XOR so that a trial's randomness depends
// only on (base seed, trial index), never on scheduling order.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return base ^ index;
}

inline double gaussian(Rng& rng, double sigma) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return sigma * dist(rng);
}

}  // namespace proprio
