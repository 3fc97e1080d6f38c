#pragma once

#include <cstdint>
#include <random>

namespace oed {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of an independent stream: base seed XOR the hashed stream index.
///
/// Streams depend only on (seed, index), never on evaluation order, so scans
/// and ensembles are reproducible under any worker count.
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) {
  return seed ^ mix64(index);
}

/// Two-level stream derivation, e.g. (purpose tag, item index).
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t tag,
                                    std::uint64_t index) {
  return stream_seed(stream_seed(seed, tag), mix64(index ^ 0x5bd1e995ULL));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double standard_normal(Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  return n01(rng);
}

/// Purpose tags for derived streams.
namespace stream {
inline constexpr std::uint64_t kPrior = 0x7072696f72ULL;
inline constexpr std::uint64_t kNoise = 0x6e6f697365ULL;
inline constexpr std::uint64_t kInner = 0x696e6e6572ULL;
inline constexpr std::uint64_t kNode = 0x6e6f6465ULL;
inline constexpr std::uint64_t kRun = 0x72756eULL;
inline constexpr std::uint64_t kRescore = 0x7265736373ULL;
inline constexpr std::uint64_t kPerturb = 0x7065727475ULL;
inline constexpr std::uint64_t kEval = 0x6576616cULL;
inline constexpr std::uint64_t kPilot = 0x70696c6f74ULL;
inline constexpr std::uint64_t kStart = 0x7374617274ULL;
inline constexpr std::uint64_t kChain = 0x636861696eULL;
}  // namespace stream

}  // namespace oed
