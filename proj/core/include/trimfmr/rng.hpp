#pragma once

#include <cstdint>
#include <random>

namespace trimfmr {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; decorrelates consecutive seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stream seed for task (a, b) under a master seed. Stable across runs and
// platforms, so any task can be rerun in isolation.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
    return mix_seed(mix_seed(mix_seed(master) ^ (a + 0x632be59bd9b4e019ULL)) ^ (b + 0x7f4a7c159e3779b9ULL));
}

inline Rng make_rng(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
    return Rng(derive_seed(master, a, b));
}

}  // namespace trimfmr
