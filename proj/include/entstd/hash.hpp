#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace entstd {

// 64-bit FNV-1a. The offset basis doubles as the pinned seed for feature
// bucketing, so bucket assignments are identical on every platform.
inline constexpr std::uint64_t kFnvOffsetBasis = 14695981039346656037ULL;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t state = kFnvOffsetBasis) noexcept {
  for (char c : bytes) {
    state ^= static_cast<std::uint8_t>(c);
    state *= kFnvPrime;
  }
  return state;
}

inline std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes,
                             std::uint64_t state = kFnvOffsetBasis) noexcept {
  for (std::uint8_t c : bytes) {
    state ^= c;
    state *= kFnvPrime;
  }
  return state;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Independent generator streams derived from one user seed, e.g. one per
// (purpose, epoch) pair, so no RNG state is ever shared between consumers.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream,
                                std::uint64_t substream = 0) {
  const std::uint64_t mixed =
      splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ substream);
  return std::mt19937_64(mixed);
}

// Named stream ids.
namespace rng_stream {
inline constexpr std::uint64_t kSynthesis = 1;
inline constexpr std::uint64_t kBatches = 2;
inline constexpr std::uint64_t kInit = 3;
inline constexpr std::uint64_t kFolds = 4;
}  // namespace rng_stream

}  // namespace entstd
