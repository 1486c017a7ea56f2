#pragma once

#include <cstdint>
#include <random>

namespace motlab {

using Rng = std::mt19937_64;

/// Independent substream seed for (base, stream); stable across runs.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

// Named substreams so different consumers of one seed never share draws.
namespace stream {
inline constexpr std::uint64_t kDictionary = 1;
inline constexpr std::uint64_t kCorpus = 2;
inline constexpr std::uint64_t kProbeCorpus = 3;
inline constexpr std::uint64_t kMotInit = 10;
inline constexpr std::uint64_t kMultiHeadInit = 11;
inline constexpr std::uint64_t kMoeFfnInit = 12;
inline constexpr std::uint64_t kRoutingNoise = 20;
inline constexpr std::uint64_t kMoeRoutingNoise = 21;
inline constexpr std::uint64_t kHistogram = 30;
}  // namespace stream

}  // namespace motlab
