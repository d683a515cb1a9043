#pragma once

#include <cstdint>
#include <random>

#include "ce2/vec.hpp"

namespace ce2 {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent child streams from one
// run seed so sub-components stay reproducible regardless of call order.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    return mix_seed(base ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(mix_seed(seed)); }

inline double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

// uniform integer in [0, n)
inline int uniform_index(Rng& rng, int n) {
    return std::uniform_int_distribution<int>(0, n - 1)(rng);
}

inline double normal01(Rng& rng) {
    return std::normal_distribution<double>(0.0, 1.0)(rng);
}

inline Vec normal_vec(Rng& rng, std::size_t dim) {
    Vec v(dim);
    for (auto& x : v) x = normal01(rng);
    return v;
}

}  // namespace ce2
