#pragma once

#include <cmath>
#include <cstdint>

namespace reflkit {

// Counter-based RNG: every draw is a pure function of (key, counter), so
// results do not depend on evaluation order or thread schedule.

inline uint64_t mix64(uint64_t v) {
    v += 0x9e3779b97f4a7c15ull;
    v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ull;
    v = (v ^ (v >> 27)) * 0x94d049bb133111ebull;
    return v ^ (v >> 31);
}

inline uint64_t hash_combine(uint64_t a, uint64_t b) {
    return mix64(a ^ mix64(b));
}

struct CounterRng {
    uint64_t key = 0;

    CounterRng() = default;
    explicit CounterRng(uint64_t seed) : key(mix64(seed)) {}
    CounterRng(uint64_t seed, uint64_t stream) : key(hash_combine(seed, stream)) {}

    uint64_t bits(uint64_t counter) const {
        return hash_combine(key, counter);
    }

    // Uniform in [0, 1).
    double uniform(uint64_t counter) const {
        return double(bits(counter) >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; consumes counters 2c and 2c+1.
    double gaussian(uint64_t counter) const {
        double u1 = uniform(2 * counter);
        double u2 = uniform(2 * counter + 1);
        double r = std::sqrt(-2.0 * std::log(1.0 - u1));
        return r * std::cos(2.0 * M_PI * u2);
    }
};

} // namespace reflkit
