#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace latwalk {

/// Per-replica random stream. Two streams built from the same (seed, replica)
/// pair produce identical sequences; distinct replica ids give independent
/// streams.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t replica = 0);

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double normal() { return normal_(engine_); }

    /// Draws an index from unnormalized nonnegative weights.
    std::size_t categorical(std::span<const double> weights);

    /// Derives a child stream; used to hand independent streams to samples
    /// inside one replica.
    Rng split();

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace latwalk
