#include "latwalk/rng.hpp"

#include <numeric>

#include "latwalk/error.hpp"

namespace latwalk {

namespace {

std::seed_seq make_seed(std::uint64_t seed, std::uint64_t replica) {
    return std::seed_seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                         static_cast<std::uint32_t>(replica),
                         static_cast<std::uint32_t>(replica >> 32), 0x6c617477u};
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t replica) {
    auto seq = make_seed(seed, replica);
    engine_.seed(seq);
}

std::size_t Rng::categorical(std::span<const double> weights) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0.0)) throw Error(ErrorKind::Domain, "categorical: weights sum to zero");
    double u = uniform() * total;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0) continue;
        last_positive = i;
        if (u < weights[i]) return i;
        u -= weights[i];
    }
    return last_positive;
}

Rng Rng::split() {
    const std::uint64_t a = engine_();
    const std::uint64_t b = engine_();
    return Rng(a, b);
}

}  // namespace latwalk
