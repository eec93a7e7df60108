#pragma once

// Pseudo-random generation used by every sampler in the library.
//
// The generator is xoshiro256** (Blackman & Vigna, 2018) seeded through
// SplitMix64. Both algorithms are fixed here and versioned by
// kRngVersion; any change to the stream must bump the version, since
// recorded seeds in manifests are only meaningful for a given version.

#include <array>
#include <cstdint>
#include <limits>

namespace morder {

inline constexpr int kRngVersion = 1;

// SplitMix64 finalizer (Steele, Lea & Flood).
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Seed for replication `index` under a master seed:
//   seed_i = master XOR mix((index + 1) * golden_gamma)
// where mix is the SplitMix64 finalizer and golden_gamma = 0x9E3779B97F4A7C15.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return master ^ splitmix64_mix((index + 1) * 0x9E3779B97F4A7C15ULL);
}

class Xoshiro256 {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256(std::uint64_t seed) noexcept {
        std::uint64_t x = seed;
        for (auto& s : state_) {
            x += 0x9E3779B97F4A7C15ULL;
            s = splitmix64_mix(x);
        }
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_{};
};

}  // namespace morder
