#pragma once

#include <cstdint>

namespace flowprompt {

// SplitMix64 bit finalizer. Used everywhere a reproducible, language-portable
// ordering or stream is needed (sampling, shuffles, bootstrap resamples).
constexpr std::uint64_t mix_bits(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

constexpr std::uint64_t kGolden64 = 0x9E3779B97F4A7C15ULL;

/// Combine a seed with a per-item key (row ID, epoch index, resample index).
constexpr std::uint64_t mix64(std::uint64_t seed, std::uint64_t key) {
    return mix_bits(mix_bits(seed + kGolden64) + key);
}

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += kGolden64;
        return mix_bits(state_);
    }

    /// Uniform in [0, 1).
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform in [0, bound). bound must be > 0.
    std::uint64_t next_below(std::uint64_t bound) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * bound) >> 64);
    }

private:
    std::uint64_t state_;
};

} // namespace flowprompt
