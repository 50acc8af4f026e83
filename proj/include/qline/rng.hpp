#pragma once

// Deterministic randomness. Every run is driven by one master seed; each
// independent consumer (per-player sampling, channel coin flips, link
// noise, attack decisions) gets its own derived stream so that adding or
// removing one consumer never shifts the bits another one sees.

#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "bitvec.hpp"

namespace qline {

// Stream indices shared across the codebase. Players use their 1-based
// player number directly.
namespace stream {
inline constexpr std::uint64_t channel = 0x10001;
inline constexpr std::uint64_t noise = 0x10002;
inline constexpr std::uint64_t attack = 0x10003;
inline constexpr std::uint64_t commit_basis = 0x10004;
inline constexpr std::uint64_t commit_value = 0x10005;
} // namespace stream

// splitmix64 finalizer: a cheap, well-distributed 64-bit mixer, the
// standard choice for turning correlated seeds into independent ones.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(master + index * 0x9e3779b97f4a7c15ull);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t word() { return engine_(); }

    // Single bit, served LSB-first from a cached word.
    bool bit() {
        if (cached_ == 0) {
            cache_ = engine_();
            cached_ = 64;
        }
        const bool b = cache_ & 1;
        cache_ >>= 1;
        --cached_;
        return b;
    }

    BitVec bits(std::size_t n) {
        BitVec v(n);
        for (std::size_t i = 0; i < n; ++i) v.set(i, bit());
        return v;
    }

    // Uniform integer in [0, n) by rejection, so every value is exactly
    // equally likely.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("Rng::below: empty range");
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
        std::uint64_t w;
        do {
            w = engine_();
        } while (w > limit);
        return w % n;
    }

    // Uniform double in [0, 1) with 53 random mantissa bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::uint64_t cache_ = 0;
    unsigned cached_ = 0;
};

// First s elements of a uniformly random permutation of [0, n), returned
// sorted. Partial Fisher-Yates on an index array; the seed is an explicit
// argument so that independently held transcripts replay the same subset.
inline std::vector<std::uint32_t> sample_subset(std::uint64_t seed, std::uint32_t n, std::uint32_t s) {
    if (s > n) throw std::invalid_argument("sample_subset: subset larger than ground set");
    std::vector<std::uint32_t> idx(n);
    for (std::uint32_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng(seed);
    for (std::uint32_t i = 0; i < s; ++i) {
        const std::uint32_t j = i + static_cast<std::uint32_t>(rng.below(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(s);
    std::sort(idx.begin(), idx.end());
    return idx;
}

} // namespace qline
