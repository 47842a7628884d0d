#pragma once

#include <cstdint>
#include <random>

namespace sdiq {

/// The project's PRNG. Every stochastic operation takes a 64-bit seed and a
/// stream tag so that independent consumers never share a sequence.
using Engine = std::mt19937_64;

enum class Stream : std::uint32_t {
  inputs = 1,
  noise = 2,
  drift = 3,
  homodyne = 4,
  synthetic = 5,
  extractor_seed = 6,
};

inline Engine make_engine(std::uint64_t seed, Stream stream, std::uint64_t block = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(block),
                    static_cast<std::uint32_t>(block >> 32)};
  return Engine(seq);
}

/// Rounds per independently seeded sampling block. Fixed so that output does
/// not depend on the worker count.
inline constexpr std::size_t kSampleBlock = 1u << 16;

}  // namespace sdiq
