#pragma once

#include <cstdint>
#include <random>

namespace cocabo {

using Rng = std::mt19937_64;

// Every draw in the library goes through these helpers rather than the
// <random> distributions, whose output is implementation-defined. Histories
// are therefore reproducible across standard libraries.

inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

/// Uniform integer in [0, n).
inline int uniform_index(Rng& rng, int n) {
  return static_cast<int>(uniform01(rng) * n) % n;
}

/// splitmix64 finaliser; used to derive independent seeds.
inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed of repetition `index` under master seed `master`.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master + (index + 1) * 0x9E3779B97F4A7C15ULL);
}

/// Named sub-streams of one run. Keeping them separate means the initial
/// design depends on the seed alone, not on the method consuming it.
enum class Stream : std::uint64_t {
  InitialDesign = 1,
  Bandit = 2,
  Acquisition = 3,
  Hyperparameters = 4,
  Fallback = 5,
  Baseline = 6,
};

inline Rng make_stream(std::uint64_t seed, Stream stream) {
  return Rng(splitmix64(seed ^ (static_cast<std::uint64_t>(stream) * 0xD1B54A32D192ED03ULL)));
}

}  // namespace cocabo
