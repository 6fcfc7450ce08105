#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

#include "ttscale/errors.hpp"

// Deterministic randomness. Everything downstream (candidate expansion,
// corruption sampling, Gumbel selection noise) pulls from RngStream so that
// results are bit-identical across reruns and across worker counts. We avoid
// std::* distributions on purpose: their draw counts are implementation
// defined, which would silently break stream alignment between builds.

namespace ttscale {

constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ull;

// splitmix64 finalizer (Steele, Lea, Flood 2014). Good enough dispersion for
// seeding and for the light statistical load here.
constexpr uint64_t mix64(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Order-sensitive fold of a small tuple of integers into one seed.
inline uint64_t stable_hash(std::initializer_list<uint64_t> parts) {
    uint64_t h = 0x243f6a8885a308d3ull;  // pi digits, nothing up the sleeve
    for (uint64_t v : parts) h = mix64(h + kGolden + v);
    return h;
}

inline uint64_t stable_hash(uint64_t a, uint64_t b) { return stable_hash({a, b}); }
inline uint64_t stable_hash(uint64_t a, uint64_t b, uint64_t c) { return stable_hash({a, b, c}); }
inline uint64_t stable_hash(uint64_t a, uint64_t b, uint64_t c, uint64_t d) {
    return stable_hash({a, b, c, d});
}

// Counter-based splitmix64 stream. Copyable; copies advance independently.
class RngStream {
  public:
    explicit RngStream(uint64_t seed = 0) : state_(seed) {}

    uint64_t next_u64() {
        state_ += kGolden;
        return mix64(state_);
    }

    // Uniform in [0, 1) with 53 random bits.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). Multiply-shift; bias is < 2^-32 for the small
    // n used here, which is far below anything the tests can resolve.
    uint32_t next_below(uint32_t n) {
        if (n == 0) throw ArityError("next_below: n must be positive");
        return static_cast<uint32_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Standard normal via Box-Muller, cosine branch only. Two draws per call,
    // always, so consumption is position-independent.
    double next_gaussian() {
        double u1 = next_unit();
        double u2 = next_unit();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // Standard Gumbel(0,1): -log(-log(U)).
    double next_gumbel() {
        double u = next_unit();
        if (u <= 0.0) u = 0x1.0p-53;
        return -std::log(-std::log(u));
    }

    // Index draw from an explicit probability vector (inverse CDF walk).
    size_t next_categorical(std::span<const double> probs) {
        if (probs.empty()) throw ArityError("next_categorical: empty distribution");
        double u = next_unit();
        double acc = 0.0;
        for (size_t i = 0; i < probs.size(); ++i) {
            acc += probs[i];
            if (u < acc) return i;
        }
        return probs.size() - 1;  // mop up rounding at the top end
    }

  private:
    uint64_t state_;
};

}  // namespace ttscale
