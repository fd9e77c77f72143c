#pragma once

#include <cstdint>
#include <random>

namespace san {

using Rng = std::mt19937_64;

inline double std_normal(Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    return n(rng);
}

inline double uniform01(Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return u(rng);
}

// Independent stream derived from (seed, index), for per-datum work.
inline Rng substream(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return Rng(seq);
}

}  // namespace san
