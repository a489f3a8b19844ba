#pragma once

#include <cstdint>
#include <random>

namespace beablesim {

/// Deterministic random stream: a seeded mt19937_64 plus a uniform-double helper
/// whose mapping is fixed arithmetic, so identical seeds give identical draws on
/// every platform.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    RandomStream(std::uint64_t seed, std::uint64_t stream_index) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed),
                          static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream_index),
                          static_cast<std::uint32_t>(stream_index >> 32)};
        engine_.seed(seq);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

/// Stream for trial `index` of an ensemble run, derived from the run seed.
/// Trials get statistically independent, order-independent streams.
inline RandomStream derive_stream(std::uint64_t seed, std::uint64_t index) {
    return RandomStream(seed, index + 1);
}

} // namespace beablesim
