#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace satsched {

// Deterministic random-number plumbing.
//
// Every stochastic quantity in the simulator is drawn from a stream keyed by
// integers that name the event (e.g. (seed, edge, slot) for channel rates, or
// (seed, episode, domain, satellite, slot) for burst arrivals).  Keyed streams
// make draws independent of evaluation order and byte-reproducible across
// platforms, which std::uniform_real_distribution and friends do not
// guarantee.  The engine is xoshiro256++, seeded through splitmix64.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Collapses a list of key integers into one 64-bit seed.
inline std::uint64_t mix_key(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t acc = 0x6A09E667F3BCC909ULL; // fractional bits of sqrt(2)
    for (std::uint64_t p : parts) {
        acc ^= splitmix64(p);
        acc = acc * 0x9E3779B97F4A7C15ULL + 0xD1B54A32D192ED03ULL;
    }
    return acc;
}

/// xoshiro256++ stream with convenience draws. Copyable, 32 bytes of state.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    RngStream(std::initializer_list<std::uint64_t> key) : RngStream(mix_key(key)) {}

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

    /// Uniform double in [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n) {
        // Multiply-shift rejection-free mapping is fine here: n is tiny
        // (action counts, station counts) relative to 2^64, so modulo bias
        // is far below anything observable in 1e4-draw tests.
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
    }

    /// Poisson by Knuth inversion; intended for small lambda (arrival rates).
    int poisson(double lambda) {
        if (lambda <= 0.0) return 0;
        const double limit = std::exp(-lambda);
        double product = uniform();
        int count = 0;
        while (product > limit) {
            product *= uniform();
            ++count;
        }
        return count;
    }

    /// Standard normal via Box-Muller (one value per call, no caching).
    double gaussian() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::array<std::uint64_t, 4> state_{};
};

} // namespace satsched
