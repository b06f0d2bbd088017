// Copyright (C) 2026 cfgdp contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace cfgdp {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
    return splitmix64(a ^ (0x9e3779b97f4a7c15ULL + b + (a << 6) + (a >> 2)));
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Counter-based pseudo-random stream. Streams derived from the same root
// seed with distinct names/indices never overlap, so adding a consumer does
// not perturb existing ones.
class Rng {
public:
    explicit Rng(std::uint64_t key) : key_(key) {}

    static Rng derive(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0) {
        return Rng(hash_combine(hash_combine(seed, fnv1a(stream)), index));
    }

    Rng derive(std::string_view stream, std::uint64_t index = 0) const {
        return Rng::derive(key_, stream, index);
    }

    std::uint64_t next_u64() { return splitmix64(hash_combine(key_, ++counter_)); }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // inclusive bounds
    long uniform_int(long lo, long hi) {
        return lo + static_cast<long>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    double gaussian() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        // Box-Muller; u1 in (0,1]
        double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double t = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(t);
        has_cached_ = true;
        return r * std::cos(t);
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool has_cached_ = false;
    double cached_ = 0.0;
};

}  // namespace cfgdp
