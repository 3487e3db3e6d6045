#pragma once
// Deterministic random source. Distributions are implemented by hand on top
// of mt19937_64 so that streams are identical across platforms and standard
// library versions; byte-identical replay of a run only needs the seed.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <string_view>

namespace metasim {

// SplitMix64 finalizer; derives well-separated seeds from components.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t seed_combine(std::uint64_t a, std::uint64_t b) {
    return mix64(a ^ mix64(b));
}

constexpr std::uint64_t seed_combine(std::uint64_t a, std::uint64_t b,
                                     std::uint64_t c) {
    return seed_combine(seed_combine(a, b), c);
}

constexpr std::uint64_t seed_combine(std::uint64_t a, std::uint64_t b,
                                     std::uint64_t c, std::uint64_t d) {
    return seed_combine(seed_combine(a, b, c), d);
}

inline std::uint64_t bits_of(double v) {
    std::uint64_t u = 0;
    std::memcpy(&u, &v, sizeof u);
    return u;
}

// FNV-1a; used for config hashes and production structure keys.
inline std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : gen_(mix64(seed)) {}

    std::uint64_t next_u64() { return gen_(); }

    // [0, 1)
    double uniform01() { return double(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    // Box-Muller; one value per call so the stream is easy to account for.
    double normal(double mean, double sd) {
        double u1 = 1.0 - uniform01();  // (0, 1]
        double u2 = uniform01();
        double z = std::sqrt(-2.0 * std::log(u1)) *
                   std::cos(2.0 * 3.14159265358979323846 * u2);
        return mean + sd * z;
    }

    // Zero-mean logistic noise by inverse CDF. scale == 0 yields exactly 0.
    double logistic(double scale) {
        if (scale == 0.0) return 0.0;
        double u = uniform01();
        while (u <= 0.0 || u >= 1.0) u = uniform01();
        return scale * std::log(u / (1.0 - u));
    }

    // Exponential inter-arrival time, rate per unit.
    double exponential(double rate) {
        double u = uniform01();
        while (u >= 1.0) u = uniform01();
        return -std::log(1.0 - u) / rate;
    }

    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + int(uniform01() * double(hi - lo + 1));
    }

    // Direct Bernoulli counting; n stays small in this codebase.
    int binomial(int n, double p) {
        int k = 0;
        for (int i = 0; i < n; ++i)
            if (uniform01() < p) ++k;
        return k;
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace metasim
