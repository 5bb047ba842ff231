#ifndef ECHOSCOPE_RANDOM_H_
#define ECHOSCOPE_RANDOM_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace echoscope {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; a bijective scrambler for seed derivation.
constexpr std::uint64_t MixSeed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stable per-stage seed: the same (master, stage) pair always yields the same
// value, independent of the order in which stages run.
constexpr std::uint64_t DeriveSeed(std::uint64_t master, std::string_view stage) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : stage) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ULL;
  }
  return MixSeed(master ^ MixSeed(hash));
}

constexpr std::uint64_t DeriveSeed(std::uint64_t master, std::uint64_t index) {
  return MixSeed(master ^ MixSeed(index + 0x632be59bd9b4e019ULL));
}

// Uniform double in [0, 1) using the top 53 bits.
inline double UniformUnit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n). Requires n > 0.
inline std::uint64_t UniformIndex(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

}  // namespace echoscope

#endif  // ECHOSCOPE_RANDOM_H_
