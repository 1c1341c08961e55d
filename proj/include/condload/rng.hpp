// Deterministic random streams keyed by (seed, replica, purpose).
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace condload {

enum class StreamPurpose : std::uint32_t {
    Events = 1,
    Outcoupling = 2,
    Test = 99,
};

/// mt19937_64 behind a seed_seq built from the key. Both are fully specified
/// by the standard, and the variates below are computed here rather than
/// through <random> distributions, so streams are identical across platforms.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t replica, StreamPurpose purpose)
    {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(replica),
                          static_cast<std::uint32_t>(replica >> 32),
                          static_cast<std::uint32_t>(purpose)};
        engine_.seed(seq);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Exponential waiting time with the given rate (rate > 0).
    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

    std::uint64_t bits() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace condload
