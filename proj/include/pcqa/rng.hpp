// Copyright (c) 2025 PCQA Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace pcqa {

// Deterministic, platform-independent random streams. Standard-library
// distributions are implementation-defined, so everything that feeds a
// reproducibility contract goes through this generator instead.

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Counter-based stream seeded by mixing an arbitrary number of tags.
/// Derive independent sub-streams with Rng(seed, tag...) rather than
/// sharing one generator across parallel work items.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {
        // decorrelate trivially related seeds (0,1,2,...)
        splitmix64(state_);
    }
    Rng(uint64_t seed, uint64_t tag) : Rng(mix(seed, tag)) {}
    Rng(uint64_t seed, std::string_view tag) : Rng(mix(seed, fnv1a64(tag))) {}
    Rng(uint64_t seed, std::string_view tag, uint64_t tag2)
        : Rng(mix(mix(seed, fnv1a64(tag)), tag2)) {}

    static uint64_t mix(uint64_t a, uint64_t b) {
        uint64_t s = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
        return splitmix64(s);
    }

    uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform integer in [0, n). n must be > 0.
    uint64_t uniform_index(uint64_t n) {
        // rejection-free multiply-shift; bias is < 2^-53 for n << 2^64
        __uint128_t m = static_cast<__uint128_t>(next_u64()) * n;
        return static_cast<uint64_t>(m >> 64);
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (explicit formula, no cached spare so
    /// the stream advances a fixed two words per draw).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

private:
    uint64_t state_;
};

}  // namespace pcqa
