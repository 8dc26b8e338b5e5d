#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace hepsel {

// Seeded streams are mt19937_64 (fixed output sequence); distributions come
// from <random>, so reruns are byte-identical for a given standard library.
using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Independent stream seed for a tuple of keys, e.g. (seed, n, repeat, problem).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) noexcept {
    std::uint64_t h = splitmix64(seed);
    for (auto k : keys) {
        h = splitmix64(h ^ splitmix64(k));
    }
    return h;
}

// Uniform integer in [0, n), n >= 1.
inline std::uint64_t uniform_index(Rng & rng, std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(rng);
}

inline double uniform01(Rng & rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline double beta_variate(Rng & rng, double a, double b) {
    const double x = std::gamma_distribution<double>(a, 1.0)(rng);
    const double y = std::gamma_distribution<double>(b, 1.0)(rng);
    return x / (x + y);
}

} // namespace hepsel
