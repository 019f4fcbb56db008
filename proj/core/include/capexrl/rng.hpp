#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace capexrl {

/// Seedable, portable random stream. Uniform bits come from std::mt19937_64
/// (bit-identical on every conforming implementation); normal deviates use
/// Box-Muller so the draw sequence does not depend on the standard library's
/// unspecified std::normal_distribution algorithm.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform on [0, 1), 53 random bits.
    double uniform01() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    /// Uniform on (0, 1]; safe as a log() argument.
    double uniform01_positive() {
        return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
    }

    /// One standard normal deviate. Consumes exactly two uniforms.
    double normal() {
        const double u1 = uniform01_positive();
        const double u2 = uniform01();
        constexpr double two_pi = 6.283185307179586476925286766559;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    /// Unbiased uniform index in [0, n). n must be positive.
    std::size_t uniform_index(std::size_t n) {
        const std::uint64_t span = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t v = gen_();
        while (v >= limit) v = gen_();
        return static_cast<std::size_t>(v % span);
    }

private:
    std::mt19937_64 gen_;
};

namespace detail {

inline std::uint64_t fnv1a64(std::string_view text, std::uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace detail

/// Derives an independent stream seed from a root seed and a purpose tag.
/// Every subsystem pulls its randomness from one of these streams, so runs
/// are reproducible end to end from the single root seed.
inline std::uint64_t derive_stream(std::uint64_t root, std::string_view tag) {
    return detail::splitmix64(root ^ detail::fnv1a64(tag));
}

inline std::uint64_t derive_stream(std::uint64_t root, std::string_view tag, std::uint64_t index) {
    return detail::splitmix64(derive_stream(root, tag) ^ detail::splitmix64(index));
}

}  // namespace capexrl
