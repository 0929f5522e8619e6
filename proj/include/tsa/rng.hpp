#pragma once

// Seedable, splittable pseudorandom streams.
//
// Every random quantity in a run is drawn from a stream identified by
// (master seed, purpose, key...) so that, e.g., the topology can be
// reproduced without replaying the protocol dynamics, and per-slot fading
// draws do not depend on the order in which receivers are evaluated.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace tsa {

/// SplitMix64 step; also used as a 64-bit mixing function.
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept
{
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t mix64(std::uint64_t a, std::uint64_t b) noexcept
{
    std::uint64_t s = a ^ (b * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL);
    return splitmix64(s);
}

enum class StreamPurpose : std::uint64_t {
    topology = 1,
    initial_age = 2,
    protocol = 3,
    fading = 4,
    oracle = 5,
};

/// xoshiro256++ generator; satisfies UniformRandomBitGenerator.
class Xoshiro256 {
public:
    using result_type = std::uint64_t;

    explicit constexpr Xoshiro256(std::uint64_t seed = 0) noexcept
    {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept
    {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform on [0, 1).
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Unit-mean exponential variate.
    double exponential() noexcept { return -std::log1p(-uniform()); }

    bool bernoulli(double p) noexcept { return uniform() < p; }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept
    {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> s_{};
};

/// Independent stream derived from the master seed and a key path.
inline Xoshiro256 make_stream(std::uint64_t master_seed, StreamPurpose purpose,
                              std::uint64_t key1 = 0, std::uint64_t key2 = 0) noexcept
{
    std::uint64_t h = mix64(master_seed, static_cast<std::uint64_t>(purpose));
    h = mix64(h, key1);
    h = mix64(h, key2);
    return Xoshiro256(h);
}

} // namespace tsa
