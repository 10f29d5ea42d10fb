#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace sphering {

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Derives an independent 64-bit key from a root seed and a path of stream
/// identifiers, e.g. {scenario, rep, purpose}. The key depends only on the
/// path, so replicate r produces the same draws regardless of scheduling.
constexpr std::uint64_t derive_key(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t key = splitmix64(seed);
  for (std::uint64_t p : path) key = splitmix64(key ^ splitmix64(p + 0x632BE59BD9B4E019ULL));
  return key;
}

using Engine = std::mt19937_64;

inline Engine make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path = {}) {
  return Engine(derive_key(seed, path));
}

/// Stream purposes, so distinct uses of one (seed, rep) never share draws.
namespace stream {
inline constexpr std::uint64_t kSample = 1;
inline constexpr std::uint64_t kPermutation = 2;
inline constexpr std::uint64_t kFolds = 3;
inline constexpr std::uint64_t kSubsample = 4;
inline constexpr std::uint64_t kLatent = 5;
inline constexpr std::uint64_t kBatch = 6;
}  // namespace stream

}  // namespace sphering
