#pragma once

// Deterministic randomness. Every random draw in the library flows from one
// 64-bit experiment seed through named stream offsets, so any reported number
// can be reproduced bit-exactly from the seed alone.
//
// Generator: std::mt19937_64, consumed as raw 64-bit words. Both the engine
// and its seeding are fully specified by the C++ standard, so sequences are
// identical across platforms and compilers.

#include <cstdint>
#include <random>

namespace hdfuse {

/// SplitMix64 finalizer; used to whiten seeds and derive child streams.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream offsets. One experiment seed fans out into independent streams;
// adding a stream here never perturbs existing ones.
enum class SeedStream : std::uint64_t {
  kTiebreak = 1,   // the per-experiment bundle tie-break hypervector
  kProvider = 2,   // item-memory vectors, banks, CA seed vectors
  kSynthData = 3,  // synthetic dataset generation
  kDimSweep = 4,   // per-dimension child seeds for sweep-dim
};

constexpr std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream) noexcept {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stream)));
}

/// Child seed for one point of a dimension sweep: mix(experiment seed, dim).
constexpr std::uint64_t derive_dim_seed(std::uint64_t seed, int dim) noexcept {
  return splitmix64(derive_seed(seed, SeedStream::kDimSweep) ^
                    splitmix64(static_cast<std::uint64_t>(dim)));
}

/// Word-oriented wrapper over std::mt19937_64.
class WordRng {
 public:
  explicit WordRng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next_word() { return engine_(); }

  /// Uniform double in [0, 1), from the top 53 bits of one word.
  double next_unit() { return static_cast<double>(next_word() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) {
    // Multiply-shift rejection-free mapping is biased for huge n; the sizes
    // used here (channel counts, row counts) are far below 2^32.
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_word()) * n) >> 64);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace hdfuse
