#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace plasmode {

// splitmix64 finalizer (Vigna / Steele et al.). Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

/// Counter-based seed derivation: the b-th output of the splitmix64 stream
/// seeded at `master_seed`. Injective in b for a fixed master seed (the
/// increment is odd and the finalizer is a bijection), and independent of
/// execution order, so replicate b can be regenerated in isolation.
constexpr std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t b) {
    return mix64(master_seed + b * 0x9e3779b97f4a7c15ULL);
}

/// Seeded generator with explicit, platform-independent draw algorithms.
/// std::uniform_int_distribution and friends are implementation-defined, so
/// persisted replicates would not be portable across standard libraries;
/// the rejection sampler and Box-Muller below pin the exact draw sequence.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Unbiased integer in [0, n). Classic modulo rejection.
    std::uint64_t uniform_below(std::uint64_t n) {
        const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
        const std::uint64_t limit = max - max % n;
        std::uint64_t v = gen_();
        while (v >= limit) v = gen_();
        return v % n;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller; the sine partner is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

  private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace plasmode
