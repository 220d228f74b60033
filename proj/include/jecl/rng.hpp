#pragma once

#include <cstdint>
#include <random>

namespace jecl {

using Rng = std::mt19937_64;

// Derives an independent sub-seed from a base seed and a stream index
// (splitmix64 on the combined word). Used to give restarts, views and
// trials their own deterministic streams.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace jecl
