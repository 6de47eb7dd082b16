#pragma once

// Minimal deterministic RNG (splitmix64).  std::mt19937 plus the standard
// distributions are implementation-defined in their consumption pattern;
// results here must be bit-identical across compilers and thread counts.

#include <cstdint>

namespace tclab::rng {

struct SplitMix64 {
    uint64_t state;

    explicit SplitMix64(uint64_t seed) : state(seed) {}

    uint64_t next() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1) with 53 random mantissa bits
    double uniform01() { return double(next() >> 11) * 0x1.0p-53; }

    // uniform in [lo, hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
};

// stream derivation: decorrelates (seed, lane) pairs
inline uint64_t mix_stream(uint64_t seed, uint64_t lane) {
    SplitMix64 g(seed ^ (0x9e3779b97f4a7c15ULL * (lane + 1)));
    g.next();
    return g.next();
}

}  // namespace tclab::rng
