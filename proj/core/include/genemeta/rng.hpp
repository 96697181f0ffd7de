#pragma once

#include <cstdint>
#include <random>

namespace genemeta {

using Rng = std::mt19937_64;

// splitmix64 finaliser; decorrelates seeds derived from small integers.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream seed for (seed, stream, index).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                                    std::uint64_t index = 0) noexcept {
  return mix_seed(mix_seed(mix_seed(seed) ^ stream) ^ index);
}

// Stream tags used with derive_seed.
enum SeedStream : std::uint64_t {
  kInitStream = 1,
  kTargetBatchStream = 2,
  kSourceBatchStream = 3,
  kPooledBatchStream = 4,
  kFoldStream = 5,
  kShapleyStream = 6,
  kSynthStream = 7,
};

}  // namespace genemeta
