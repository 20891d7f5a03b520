// Counter-based random number generation for reproducible simulation.
//
// The generator is SplitMix64 (Steele, Lea & Flood 2014): output n is
// mix(seed + (n+1) * 0x9E3779B97F4A7C15), a pure function of (seed, counter).
// Substreams are derived by hashing (seed, subject index, item index) through
// the same mixer, so per-trial streams are independent of scheduling order.
#pragma once

#include <cstdint>

namespace gazelab {

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in the open interval (0, 1); safe for quantile transforms.
    double next_open_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    bool next_bernoulli(double p) { return next_uniform() < p; }

    /// Deterministic substream seed for a (stream, index) pair.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
        SplitMix64 h(seed ^ (0x9E3779B97F4A7C15ULL * (a + 1)));
        std::uint64_t s = h.next_u64();
        SplitMix64 h2(s ^ (0xBF58476D1CE4E5B9ULL * (b + 1)));
        return h2.next_u64();
    }

private:
    std::uint64_t state_;
};

}  // namespace gazelab
