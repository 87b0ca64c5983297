#pragma once

#include <cmath>
#include <cstdint>

namespace consensus_lab {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// xoshiro256++ with SplitMix64 seeding. One instance per Monte Carlo run;
/// streams for (master_seed, index) pairs are derived deterministically so
/// batch results do not depend on scheduling.
class Rng {
public:
    explicit Rng(std::uint64_t seed) { reseed(seed); }

    Rng(std::uint64_t master_seed, std::uint64_t stream_index) {
        reseed(derive_stream_seed(master_seed, stream_index));
    }

    static std::uint64_t derive_stream_seed(std::uint64_t master_seed, std::uint64_t stream_index) {
        std::uint64_t z = master_seed ^ (0xD1B54A32D192ED03ULL + 0x9E3779B97F4A7C15ULL * stream_index);
        return splitmix64(z);
    }

    void reseed(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : state_) w = splitmix64(sm);
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
        have_cached_normal_ = false;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in (0, 1]; safe as a log argument.
    double uniform_pos() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    /// Uniform integer in [0, bound) with rejection (Lemire); exact for any bound.
    std::uint64_t uniform_below(std::uint64_t bound) {
        auto mul_hi_lo = [](std::uint64_t a, std::uint64_t b, std::uint64_t& lo) {
            __uint128_t m = static_cast<__uint128_t>(a) * b;
            lo = static_cast<std::uint64_t>(m);
            return static_cast<std::uint64_t>(m >> 64);
        };
        std::uint64_t lo;
        std::uint64_t hi = mul_hi_lo(next_u64(), bound, lo);
        if (lo < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (lo < threshold) hi = mul_hi_lo(next_u64(), bound, lo);
        }
        return hi;
    }

    /// Standard normal via Marsaglia's polar method (exact, pair-cached).
    double normal() {
        if (have_cached_normal_) {
            have_cached_normal_ = false;
            return cached_normal_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double factor = std::sqrt(-2.0 * std::log(s) / s);
        cached_normal_ = v * factor;
        have_cached_normal_ = true;
        return u * factor;
    }

    /// Gamma(alpha, 1) for alpha >= 1 via Marsaglia-Tsang squeeze.
    double gamma(double alpha) {
        const double d = alpha - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform_pos();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    /// Beta(a, b) for a, b >= 1 as a gamma ratio.
    double beta(double a, double b) {
        const double ga = gamma(a);
        const double gb = gamma(b);
        return ga / (ga + gb);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4] = {};
    double cached_normal_ = 0.0;
    bool have_cached_normal_ = false;
};

}  // namespace consensus_lab
