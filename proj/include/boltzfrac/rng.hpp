#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "boltzfrac/vec3.hpp"

namespace boltzfrac {

// SplitMix64 step; used only to derive independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Seed for stream k of a run: the (k+1)-th SplitMix64 output from `seed`.
// Injective in k for a fixed run seed, so replicas never share a stream.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t k) {
    std::uint64_t s = seed;
    std::uint64_t out = 0;
    for (std::uint64_t i = 0; i <= k; ++i) out = splitmix64(s);
    return out;
}

// mt19937_64 with hand-rolled variate transforms. The standard fixes the
// engine's output sequence bit-for-bit; distributions in <random> do not,
// so every transform here is written out to keep runs reproducible across
// standard libraries.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Exponential with the given rate; uniform() < 1 keeps the log finite.
    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

    // Standard normal via Box-Muller, pair cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 == 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    Vec3 normal3() { return {normal(), normal(), normal()}; }

    // Uniform on {0, ..., n-1} by rejection; exact, no modulo bias.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v = eng_();
        while (v >= limit) v = eng_();
        return v % n;
    }

  private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace boltzfrac
